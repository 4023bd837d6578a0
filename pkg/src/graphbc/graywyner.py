"""Source-coding layer: represent blocks of a correlated pair as edges of a
seeded random bipartite graph.

A shared description sequence is drawn per block; each block carries one
collection of left-marginal sequences and one of right-marginal sequences,
both conditionally typical for that shared sequence. Pairs that are jointly
typical alongside the shared sequence form the edges. Encoding finds a
shared sequence fitting the observed block, then locates the two marginal
blocks by exact content match; each decoder is a bare table lookup on its
own index pair.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bigraph import BipartiteGraph
from .errors import InvalidMessageError
from .probability import (
    ConditionalPmf,
    FiniteAlphabet,
    JointPmf,
    entropy,
    extend,
    mutual_information,
)
from .typicality import (
    ConditionalTypeFamily,
    TypicalityParams,
    count_bounds,
    pair_typical_matrix,
)

RATE_TOL = 1e-9

# deviation fractions above which a build's degree statistics are considered
# too ragged for its error estimates to be taken at face value
FLAG_FRACTION = 0.25


@dataclass(frozen=True)
class SourcePair:
    """Memoryless correlated pair: two alphabets and their joint law."""

    s_alphabet: FiniteAlphabet
    t_alphabet: FiniteAlphabet
    joint: JointPmf

    def __post_init__(self):
        if tuple(a.size for a in self.joint.axes) != (self.s_alphabet.size,
                                                      self.t_alphabet.size):
            raise ValueError("joint axes must match the two alphabets")


def triangular_source() -> SourcePair:
    """Binary pair with uniform mass on (0,0), (0,1), (1,1); the (1,0)
    corner never occurs, so the left symbol implies the right one."""
    b = FiniteAlphabet(2)
    joint = JointPmf((b, b), np.array([[1 / 3, 1 / 3], [0.0, 1 / 3]]))
    return SourcePair(b, b, joint)


def constant_common_layer(source: SourcePair) -> ConditionalPmf:
    """Degenerate shared description: one symbol regardless of the pair."""
    z = FiniteAlphabet(1)
    rows = np.ones((source.s_alphabet.size, source.t_alphabet.size, 1))
    return ConditionalPmf((source.s_alphabet, source.t_alphabet), (z,), rows)


def revealing_common_layer(source: SourcePair) -> ConditionalPmf:
    """Shared description that names the support cell of the pair outright,
    so nothing is left for the private branches to resolve."""
    probs = source.joint.mass
    support = [(s, t) for s in range(probs.shape[0])
               for t in range(probs.shape[1]) if probs[s, t] > 0]
    z = FiniteAlphabet(len(support))
    rows = np.zeros((probs.shape[0], probs.shape[1], len(support)))
    for k, (s, t) in enumerate(support):
        rows[s, t, k] = 1.0
    # unreachable cells still need a valid row
    for s in range(probs.shape[0]):
        for t in range(probs.shape[1]):
            if probs[s, t] == 0:
                rows[s, t, :] = 1.0 / len(support)
    return ConditionalPmf((source.s_alphabet, source.t_alphabet), (z,), rows)


@dataclass(frozen=True)
class GwCodeConfig:
    """Build parameters: block length, typicality and degree slack, the
    three rates, the shared-description layer, and the seed.

    build_graph=False skips edge generation and degree diagnostics; the
    codebook then supports encoding and decoding but reports no graph.
    Useful when the collections are large enough that the all-pairs
    typicality scan dominates the build."""

    n: int
    eps: float
    eps_prime: float
    r0: float
    r1: float
    r2: float
    aux: ConditionalPmf
    seed: int = 0
    build_graph: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length must be at least 1")
        for name in ("eps", "eps_prime"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("r0", "r1", "r2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class GwRateFacts:
    """Entropic quantities of p(s,t) p(z|s,t) that the rates are checked
    against, plus the derived per-branch graph rates."""

    h_s_given_z: float
    h_t_given_z: float
    h_pair_given_z: float
    i_pair_given_z: float
    i_pair_with_z: float
    r1p: float
    r2p: float


def gw_rate_facts(source: SourcePair, config: GwCodeConfig) -> GwRateFacts:
    joint = extend(source.joint, config.aux, (0, 1))  # axes (S, T, Z)
    i_cond = mutual_information(joint, (0,), (1,), given=(2,))
    return GwRateFacts(
        entropy(joint, (0,), (2,)),
        entropy(joint, (1,), (2,)),
        entropy(joint, (0, 1), (2,)),
        i_cond,
        mutual_information(joint, (0, 1), (2,)),
        config.r1 - i_cond,
        config.r2 - i_cond,
    )


def _check_gw_rates(facts: GwRateFacts, config: GwCodeConfig):
    # both private rates must exceed the conditional pair information, else
    # the derived graph rates go negative and binning cannot work
    if config.r1 <= facts.i_pair_given_z - RATE_TOL:
        raise ValueError("left rate must exceed the conditional pair information")
    if config.r2 <= facts.i_pair_given_z - RATE_TOL:
        raise ValueError("right rate must exceed the conditional pair information")


@dataclass(frozen=True)
class GwDegreeReport:
    """Vertices whose log-degree strays from the nominal by more than the
    degree slack; degree 0 always violates."""

    r1p: float
    r2p: float
    eps_prime: float
    left_violations: tuple
    right_violations: tuple
    left_fraction: float
    right_fraction: float


@dataclass(frozen=True)
class GwDiagnostics:
    realized_r0: float
    realized_r1: float
    realized_r2: float
    edges_per_block: tuple | None
    degree_report: GwDegreeReport | None
    facts: GwRateFacts


@dataclass(frozen=True)
class GwCodebook:
    source: SourcePair
    config: GwCodeConfig
    joint: JointPmf = field(repr=False)
    z_list: np.ndarray = field(repr=False)
    z_onehot: np.ndarray = field(repr=False)
    lo_bounds: np.ndarray = field(repr=False)
    hi_bounds: np.ndarray = field(repr=False)
    s_bins: tuple = field(repr=False)
    t_bins: tuple = field(repr=False)
    s_lookup: tuple = field(repr=False)
    t_lookup: tuple = field(repr=False)
    block_count: int
    bins_left: int
    bins_right: int
    graph: BipartiteGraph | None = field(repr=False)
    block_edges: tuple | None = field(repr=False)
    degree_flagged: bool | None


def _floor_pow(n: int, rate: float) -> int:
    return max(1, int(math.floor(2.0 ** (n * rate) + RATE_TOL)))


def _content_lookup(rows: np.ndarray) -> dict:
    # first occurrence wins; duplicates are kept in the bin but tie-break low
    table = {}
    for idx in range(rows.shape[0] - 1, -1, -1):
        table[rows[idx].tobytes()] = idx
    return table


def build_gw_code(source: SourcePair, config: GwCodeConfig):
    """Seeded-deterministic codebook construction; returns
    (GwCodebook, GwDiagnostics)."""
    joint = extend(source.joint, config.aux, (0, 1))  # axes (S, T, Z)
    facts = gw_rate_facts(source, config)
    _check_gw_rates(facts, config)

    n = config.n
    params = TypicalityParams(config.eps, n)
    rng = random.Random(config.seed)

    block_count = _floor_pow(n, config.r0)
    bins_left = _floor_pow(n, config.r1)
    bins_right = _floor_pow(n, config.r2)

    pz = joint.marginal((2,))
    pzs = joint.marginal((2, 0))
    pzt = joint.marginal((2, 1))
    lo_stz, hi_stz = count_bounds(joint, params)
    sizes = tuple(a.size for a in joint.axes)

    z_family = ConditionalTypeFamily(pz, params)
    z_list = np.stack([np.asarray(z_family.sample(rng))
                       for _ in range(block_count)])

    s_bins, t_bins, s_lookup, t_lookup = [], [], [], []
    edges = []
    edges_per_block = []
    families = {}  # shared sequences repeat; reuse their conditional families
    for m in range(block_count):
        zn = z_list[m]
        key = zn.tobytes()
        if key not in families:
            families[key] = (ConditionalTypeFamily(pzs, params, (0,), (zn,)),
                             ConditionalTypeFamily(pzt, params, (0,), (zn,)))
        fam_s, fam_t = families[key]
        s_rows = fam_s.sample_many(rng, bins_left)
        t_rows = fam_t.sample_many(rng, bins_right)
        s_bins.append(s_rows)
        t_bins.append(t_rows)
        s_lookup.append(_content_lookup(s_rows))
        t_lookup.append(_content_lookup(t_rows))
        if config.build_graph:
            typ = pair_typical_matrix(s_rows, t_rows, zn, lo_stz, hi_stz, sizes)
            ii, jj = np.nonzero(typ)
            base_l = m * bins_left
            base_r = m * bins_right
            for k, l in zip(ii, jj):
                edges.append((base_l + int(k) + 1, base_r + int(l) + 1))
            edges_per_block.append(int(typ.sum()))

    graph = None
    report = None
    flagged = None
    if config.build_graph:
        graph = BipartiteGraph(block_count * bins_left,
                               block_count * bins_right, edges)
        ld = graph.left_degrees()
        rd = graph.right_degrees()
        with np.errstate(divide="ignore"):
            left_dev = np.abs(np.log2(ld.astype(float)) / n - facts.r2p)
            right_dev = np.abs(np.log2(rd.astype(float)) / n - facts.r1p)
        lbad = np.nonzero(~(left_dev <= config.eps_prime))[0]
        rbad = np.nonzero(~(right_dev <= config.eps_prime))[0]
        report = GwDegreeReport(
            facts.r1p, facts.r2p, config.eps_prime,
            tuple((int(v + 1), int(ld[v])) for v in lbad),
            tuple((int(v + 1), int(rd[v])) for v in rbad),
            len(lbad) / graph.v1_size,
            len(rbad) / graph.v2_size,
        )
        flagged = max(report.left_fraction, report.right_fraction) > FLAG_FRACTION

    diagnostics = GwDiagnostics(
        math.log2(block_count) / n,
        math.log2(bins_left) / n,
        math.log2(bins_right) / n,
        tuple(edges_per_block) if config.build_graph else None,
        report, facts,
    )
    z_size = joint.axes[2].size
    z_onehot = (z_list[:, :, None] == np.arange(z_size)[None, None, :]
                ).astype(np.int8)
    codebook = GwCodebook(
        source, config, joint, z_list, z_onehot, lo_stz, hi_stz,
        tuple(s_bins), tuple(t_bins), tuple(s_lookup), tuple(t_lookup),
        block_count, bins_left, bins_right,
        graph, tuple(edges_per_block) if config.build_graph else None,
        flagged,
    )
    return codebook, diagnostics


# ---------------------------------------------------------------------------
# encode / decode


@dataclass(frozen=True)
class GwEncoding:
    m: int
    i: int
    j: int
    fallback: bool


def _triple_typical(codebook: GwCodebook, sn, tn, zn) -> bool:
    sizes = [a.size for a in codebook.joint.axes]
    counts = np.zeros(sizes, dtype=np.int64)
    np.add.at(counts, (sn, tn, zn), 1)
    return bool(np.all(counts >= codebook.lo_bounds)
                and np.all(counts <= codebook.hi_bounds))


def _find_block(codebook: GwCodebook, sn, tn):
    """First block whose shared sequence is jointly typical with (sn, tn);
    vectorized across all blocks at once."""
    lo, hi = codebook.lo_bounds, codebook.hi_bounds
    ok = np.ones(codebook.block_count, dtype=bool)
    for s in range(lo.shape[0]):
        for t in range(lo.shape[1]):
            pos = np.nonzero((sn == s) & (tn == t))[0]
            cnt = codebook.z_onehot[:, pos, :].sum(axis=1)
            ok &= ((cnt >= lo[s, t][None, :])
                   & (cnt <= hi[s, t][None, :])).all(axis=1)
            if not ok.any():
                return None
    idx = np.nonzero(ok)[0]
    return int(idx[0]) + 1 if idx.size else None


def _random_block_edge(codebook: GwCodebook, m: int, rng,
                       rounds: int = 4, batch: int = 64):
    """Uniform edge of block m when the graph is stored; otherwise a bounded
    random search for a typical pair, degrading to a uniform index pair."""
    if codebook.graph is not None:
        base_l = (m - 1) * codebook.bins_left
        base_r = (m - 1) * codebook.bins_right
        pairs = codebook.graph.edges()
        mask = ((pairs[:, 0] > base_l)
                & (pairs[:, 0] <= base_l + codebook.bins_left))
        block = pairs[mask]
        if block.shape[0]:
            k = rng.randrange(block.shape[0])
            return int(block[k, 0] - base_l), int(block[k, 1] - base_r)
    zn = codebook.z_list[m - 1]
    lo, hi = codebook.lo_bounds, codebook.hi_bounds
    sizes = tuple(a.size for a in codebook.joint.axes)
    s_rows = codebook.s_bins[m - 1]
    t_rows = codebook.t_bins[m - 1]
    for _ in range(rounds):
        ii = [rng.randrange(codebook.bins_left) for _ in range(batch)]
        jj = [rng.randrange(codebook.bins_right) for _ in range(batch)]
        for i, j in zip(ii, jj):
            typ = pair_typical_matrix(s_rows[i:i + 1], t_rows[j:j + 1], zn,
                                      lo, hi, sizes)
            if typ[0, 0]:
                return i + 1, j + 1
    return (rng.randrange(codebook.bins_left) + 1,
            rng.randrange(codebook.bins_right) + 1)


def gw_encode(codebook: GwCodebook, sn, tn, rng) -> GwEncoding:
    """Map a source block to (shared index, left index, right index).

    The first shared sequence jointly typical with the block wins; both
    branch indices then come from exact content match inside that block's
    collections. Any failure falls back to a random edge of the chosen
    block (random block if none fit) and is flagged."""
    sn = np.asarray(sn)
    tn = np.asarray(tn)
    chosen = _find_block(codebook, sn, tn)
    if chosen is None:
        m = rng.randrange(codebook.block_count) + 1
        i, j = _random_block_edge(codebook, m, rng)
        return GwEncoding(m, i, j, True)
    i = codebook.s_lookup[chosen - 1].get(sn.astype(
        codebook.s_bins[chosen - 1].dtype).tobytes())
    j = codebook.t_lookup[chosen - 1].get(tn.astype(
        codebook.t_bins[chosen - 1].dtype).tobytes())
    if i is None or j is None:
        i, j = _random_block_edge(codebook, chosen, rng)
        return GwEncoding(chosen, i, j, True)
    return GwEncoding(chosen, i + 1, j + 1, False)


def gw_decode(codebook: GwCodebook, receiver: int, m: int, index: int):
    """Pure table lookup; receiver 1 reads the left collection, receiver 2
    the right one."""
    if receiver not in (1, 2):
        raise InvalidMessageError("receiver must be 1 or 2")
    if not 1 <= m <= codebook.block_count:
        raise InvalidMessageError("shared index out of range")
    rows = codebook.s_bins[m - 1] if receiver == 1 else codebook.t_bins[m - 1]
    if not 1 <= index <= rows.shape[0]:
        raise InvalidMessageError("branch index out of range")
    return rows[index - 1].copy()


# ---------------------------------------------------------------------------
# error estimation


@dataclass(frozen=True)
class GwErrorEstimate:
    tau: float
    wilson_low: float
    wilson_high: float
    trials: int
    errors: int
    fallbacks: int
    left_errors: int
    right_errors: int
    unreliable: bool


def _wilson(errors: int, trials: int, z: float = 1.959963984540054):
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials
                                   + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def _gw_trials(codebook: GwCodebook, flat, seed, count):
    gen = np.random.Generator(np.random.PCG64(seed))
    rng = random.Random(seed)
    n = codebook.config.n
    t_size = codebook.source.t_alphabet.size
    errs = fb = le = re = 0
    for _ in range(count):
        cells = gen.choice(flat.size, size=n, p=flat)
        sn = (cells // t_size).astype(np.int64)
        tn = (cells % t_size).astype(np.int64)
        enc = gw_encode(codebook, sn, tn, rng)
        fb += enc.fallback
        bad_l = not np.array_equal(gw_decode(codebook, 1, enc.m, enc.i), sn)
        bad_r = not np.array_equal(gw_decode(codebook, 2, enc.m, enc.j), tn)
        le += bad_l
        re += bad_r
        errs += bad_l or bad_r
    return errs, fb, le, re


def estimate_gw_error(codebook: GwCodebook, source: SourcePair, trials: int,
                      rng, threads: int = 1) -> GwErrorEstimate:
    """Monte Carlo block error rate: iid source draws, encode, decode both
    branches, count any mismatch."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    flat = source.joint.mass.reshape(-1)
    # fixed chunk size so the result does not depend on the thread count
    chunk = max(1, min(256, trials))
    jobs = [(rng.getrandbits(63), min(chunk, trials - start))
            for start in range(0, trials, chunk)]
    if threads == 1:
        results = [_gw_trials(codebook, flat, s, c) for s, c in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda sc: _gw_trials(codebook, flat, sc[0], sc[1]), jobs))
    errors = sum(r[0] for r in results)
    fallbacks = sum(r[1] for r in results)
    left = sum(r[2] for r in results)
    right = sum(r[3] for r in results)
    lo, hi = _wilson(errors, trials)
    return GwErrorEstimate(errors / trials, lo, hi, trials, errors,
                           fallbacks, left, right,
                           codebook.degree_flagged is True)

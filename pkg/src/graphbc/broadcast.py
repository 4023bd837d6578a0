"""Channel-coding over a two-receiver discrete memoryless broadcast channel.

A seeded build draws a shared-layer sequence per common message, two
conditionally typical collections per block, partitions them into bins, and
connects bin pairs that contain a jointly typical sequence pair. Codewords
are drawn typical with their chosen triple. Decoding is two-stage joint
typicality with uniqueness; any ambiguity is a decode failure (a value,
never an exception).

Symbols are 0-based everywhere; message and vertex indices are 1-based.
"""

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
    compose_chain,
    entropy,
    mutual_information,
)
from .typicality import (
    ConditionalTypeFamily,
    TypicalityParams,
    count_bounds,
    pair_typical_matrix,
)

RATE_TOL = 1e-9


@dataclass(frozen=True)
class BroadcastChannel:
    """Memoryless broadcast channel p(y1, y2 | x) used letter by letter."""

    x_alphabet: FiniteAlphabet
    y1_alphabet: FiniteAlphabet
    y2_alphabet: FiniteAlphabet
    transition: ConditionalPmf

    def __post_init__(self):
        if self.transition.given_sizes != (self.x_alphabet.size,):
            raise ValueError("transition must condition on the input alphabet")
        sizes = tuple(a.size for a in self.transition.output_axes)
        if sizes != (self.y1_alphabet.size, self.y2_alphabet.size):
            raise ValueError("transition outputs must match the two receiver alphabets")

    def cumulative_rows(self) -> np.ndarray:
        flat = self.transition.rows.reshape(self.x_alphabet.size, -1)
        return np.cumsum(flat, axis=1)


def blackwell_channel() -> BroadcastChannel:
    """Deterministic three-input channel: 0 -> (0,0), 1 -> (0,1), 2 -> (1,1)."""
    rows = np.zeros((3, 2, 2))
    rows[0, 0, 0] = 1.0
    rows[1, 0, 1] = 1.0
    rows[2, 1, 1] = 1.0
    x, y = FiniteAlphabet(3), FiniteAlphabet(2)
    return BroadcastChannel(x, y, y, ConditionalPmf((x,), (y, y), rows))


def identity_channel(size: int) -> BroadcastChannel:
    """Both receivers observe the input unchanged."""
    rows = np.zeros((size, size, size))
    for s in range(size):
        rows[s, s, s] = 1.0
    x = FiniteAlphabet(size)
    return BroadcastChannel(x, x, x, ConditionalPmf((x,), (x, x), rows))


@dataclass(frozen=True)
class AuxChain:
    """Factored input law p(z) p(u,v|z) p(x|z,u,v) feeding the channel."""

    pz: JointPmf
    puv_given_z: ConditionalPmf
    px_given_zuv: ConditionalPmf


def matched_blackwell_aux() -> AuxChain:
    """Constant shared layer; (U, V) copies the channel output pair under a
    uniform channel input."""
    z = FiniteAlphabet(1)
    b = FiniteAlphabet(2)
    x = FiniteAlphabet(3)
    pz = JointPmf((z,), np.array([1.0]))
    # uniform X pushed through the deterministic map gives mass 1/3 on
    # (0,0), (0,1), (1,1)
    puv = np.array([[1 / 3, 1 / 3], [0.0, 1 / 3]]).reshape(1, 2, 2)
    puv_given_z = ConditionalPmf((z,), (b, b), puv)
    px = np.zeros((1, 2, 2, 3))
    px[0, 0, 0, 0] = 1.0
    px[0, 0, 1, 1] = 1.0
    px[0, 1, 1, 2] = 1.0
    px[0, 1, 0, :] = 1 / 3  # unreachable conditioning cell; any row works
    px_given_zuv = ConditionalPmf((z, b, b), (x,), px)
    return AuxChain(pz, puv_given_z, px_given_zuv)


def full_support_blackwell_aux() -> AuxChain:
    """Constant shared layer with a full-support pair pmf whose left branch
    is revealed exactly at receiver 1.

    The input map sends (0,0), (0,1) to the two erasure-free symbols and
    both right-branch-active cells to the third symbol, so y1 equals the
    left branch deterministically while every (left, right) cell keeps
    positive mass. Full support keeps per-vertex degree statistics
    homogeneous across realized rows, which is what lets degree
    concentration show up at short block lengths."""
    z = FiniteAlphabet(1)
    b = FiniteAlphabet(2)
    x = FiniteAlphabet(3)
    pz = JointPmf((z,), np.array([1.0]))
    puv = np.array([[0.28, 0.225], [0.04, 0.455]]).reshape(1, 2, 2)
    puv_given_z = ConditionalPmf((z,), (b, b), puv)
    px = np.zeros((1, 2, 2, 3))
    px[0, 0, 0, 0] = 1.0
    px[0, 0, 1, 1] = 1.0
    px[0, 1, 0, 2] = 1.0
    px[0, 1, 1, 2] = 1.0
    px_given_zuv = ConditionalPmf((z, b, b), (x,), px)
    return AuxChain(pz, puv_given_z, px_given_zuv)


@dataclass(frozen=True)
class ChannelCodeConfig:
    """Build parameters: block length, typicality and degree slack, rates,
    the auxiliary chain, and the seed.

    decode_eps widens the decoder's typicality test (default 2x eps: draws
    use coarser per-cell bands than the triple test, so decoding at eps
    itself would reject correct pairs). x_draw_eps widens the codeword draw
    the same way (default |X| times eps: with a deterministic input layer
    the draw set then contains the image sequence of any typical pair,
    where the unwidened band is empty at small n). enforce_region=False
    skips the rate admissibility checks for deliberate out-of-region
    experiments.
    """

    n: int
    eps: float
    eps_prime: float
    r0: float
    r1: float
    r2: float
    aux: AuxChain
    seed: int
    decode_eps: float | None = None
    x_draw_eps: float | None = None
    enforce_region: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length must be positive")
        if self.eps <= 0 or self.eps_prime <= 0:
            raise ValueError("slacks must be positive")
        if min(self.r0, self.r1, self.r2) < 0:
            raise ValueError("rates must be non-negative")
        for name in ("decode_eps", "x_draw_eps"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def effective_decode_eps(self) -> float:
        return 2.0 * self.eps if self.decode_eps is None else self.decode_eps

    def effective_x_draw_eps(self, x_size: int) -> float:
        return x_size * self.eps if self.x_draw_eps is None else self.x_draw_eps


@dataclass(frozen=True)
class RateFacts:
    """Information quantities of the composed system law and the derived
    rate bookkeeping."""

    i_left: float       # I(U; Y1 | Z)
    i_right: float      # I(V; Y2 | Z)
    i_pair: float       # I(U; V | Z)
    degree_sum: float   # i_left + i_right - i_pair - 2*eps
    r1p: float
    r2p: float


def rate_facts(joint: JointPmf, config: ChannelCodeConfig) -> RateFacts:
    # caps clamp at zero so an all-degenerate zero-rate config validates
    i1 = mutual_information(joint, (1,), (4,), given=(0,))
    i2 = mutual_information(joint, (2,), (5,), given=(0,))
    iuv = mutual_information(joint, (1,), (2,), given=(0,))
    a = max(0.0, i1 + i2 - iuv - 2.0 * config.eps)
    return RateFacts(i1, i2, iuv, a,
                     max(0.0, a - config.r2), max(0.0, a - config.r1))


def _check_rates(facts: RateFacts, config: ChannelCodeConfig):
    t = RATE_TOL
    if config.r1 > max(0.0, facts.i_left - config.eps) + t:
        raise ValueError("left private rate exceeds its mutual-information cap")
    if config.r2 > max(0.0, facts.i_right - config.eps) + t:
        raise ValueError("right private rate exceeds its mutual-information cap")
    if max(config.r1, config.r2) > facts.degree_sum + t:
        raise ValueError("degree sum must dominate each private rate")
    if facts.degree_sum > config.r1 + config.r2 + t:
        raise ValueError("private rates must dominate the degree sum")


@dataclass(frozen=True)
class DegreeReport:
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
class SuperBinStats:
    width_left: int
    width_right: int
    left_zero_fraction: float
    right_zero_fraction: float
    left_mean_occupancy: float
    right_mean_occupancy: float
    total_edges: int


@dataclass(frozen=True)
class BuildDiagnostics:
    realized_r0: float
    realized_r1: float
    realized_r2: float
    collection_size_left: int
    collection_size_right: int
    bin_size_left: int
    bin_size_right: int
    edges_per_block: tuple
    dropped_edges: tuple
    empty_aux_blocks: tuple
    degree_report: DegreeReport
    super_bins: SuperBinStats
    facts: RateFacts


@dataclass(frozen=True)
class ChannelCodebook:
    channel: BroadcastChannel
    config: ChannelCodeConfig
    joint: JointPmf = field(repr=False)
    z_list: np.ndarray = field(repr=False)
    u_collections: tuple = field(repr=False)
    v_collections: tuple = field(repr=False)
    block_count: int
    left_bins: int
    right_bins: int
    bin_size_left: int
    bin_size_right: int
    graph: BipartiteGraph = field(repr=False)
    codewords: dict = field(repr=False)
    chosen_pairs: dict = field(repr=False)

    def edge_message(self, edge_code: int):
        left = edge_code // self.graph.v2_size + 1
        right = edge_code % self.graph.v2_size + 1
        m = (left - 1) // self.left_bins + 1
        return m, left - (m - 1) * self.left_bins, right - (m - 1) * self.right_bins


def _floor_pow(n: int, rate: float) -> int:
    return max(1, int(math.floor(2.0 ** (n * rate) + RATE_TOL)))


def _pair_matrix(u_rows, v_rows, zn, lo, hi, sizes, chunk=512):
    return pair_typical_matrix(u_rows, v_rows, zn, lo, hi, sizes, chunk)


def build_channel_code(channel: BroadcastChannel, config: ChannelCodeConfig):
    """Seeded-deterministic codebook construction; returns
    (ChannelCodebook, BuildDiagnostics)."""
    joint = compose_chain(config.aux.pz, config.aux.puv_given_z,
                          config.aux.px_given_zuv, channel.transition)
    facts = rate_facts(joint, config)
    if config.enforce_region:
        _check_rates(facts, config)

    n = config.n
    params = TypicalityParams(config.eps, n)
    rng = random.Random(config.seed)

    block_count = _floor_pow(n, config.r0)
    left_bins = _floor_pow(n, config.r1)
    right_bins = _floor_pow(n, config.r2)
    bin_size_left = _floor_pow(n, facts.i_left - config.r1 - config.eps)
    bin_size_right = _floor_pow(n, facts.i_right - config.r2 - config.eps)
    count_left = left_bins * bin_size_left
    count_right = right_bins * bin_size_right

    pz = joint.marginal((0,))
    puz = joint.marginal((0, 1))     # axes (Z, U)
    pvz = joint.marginal((0, 2))     # axes (Z, V)
    puvz = joint.marginal((1, 2, 0))  # axes (U, V, Z)
    pxuvz = joint.marginal((0, 1, 2, 3))  # axes (Z, U, V, X)
    x_params = TypicalityParams(
        config.effective_x_draw_eps(channel.x_alphabet.size), n)
    lo_uvz, hi_uvz = count_bounds(puvz, params)
    sizes = tuple(a.size for a in puvz.axes)

    z_family = ConditionalTypeFamily(pz, params)
    z_list = np.stack([np.asarray(z_family.sample(rng)) for _ in range(block_count)])

    u_collections, v_collections = [], []
    edges = []
    codewords = {}
    chosen_pairs = {}
    dropped = []
    empty_blocks = []
    edges_per_block = []

    for m in range(block_count):
        zn = z_list[m]
        try:
            fam_u = ConditionalTypeFamily(puz, params, (0,), (zn,))
            fam_v = ConditionalTypeFamily(pvz, params, (0,), (zn,))
            if fam_u.size == 0 or fam_v.size == 0:
                raise ValueError
        except ValueError:
            empty_blocks.append(m + 1)
            u_collections.append(np.empty((0, n), dtype=np.int64))
            v_collections.append(np.empty((0, n), dtype=np.int64))
            edges_per_block.append(0)
            continue
        u_rows = fam_u.sample_many(rng, count_left)
        v_rows = fam_v.sample_many(rng, count_right)
        u_collections.append(u_rows)
        v_collections.append(v_rows)

        typ = _pair_matrix(u_rows, v_rows, zn, lo_uvz, hi_uvz, sizes)
        blocks = typ.reshape(left_bins, bin_size_left, right_bins, bin_size_right)
        has_edge = blocks.any(axis=(1, 3))
        block_edges = 0
        for i, j in zip(*np.nonzero(has_edge)):
            sub = blocks[i, :, j, :]
            k_off, l_off = np.unravel_index(np.argmax(sub), sub.shape)
            k = i * bin_size_left + k_off
            l = j * bin_size_right + l_off
            fam_x = ConditionalTypeFamily(
                pxuvz, x_params, (0, 1, 2), (zn, u_rows[k], v_rows[l]))
            left = m * left_bins + i + 1
            right = m * right_bins + j + 1
            if fam_x.size == 0:
                dropped.append((left, right))
                continue
            xn = np.asarray(fam_x.sample(rng))
            edges.append((left, right))
            code = (left - 1) * (block_count * right_bins) + (right - 1)
            codewords[code] = xn
            chosen_pairs[code] = (int(k), int(l))
            block_edges += 1
        edges_per_block.append(block_edges)

    graph = BipartiteGraph(block_count * left_bins, block_count * right_bins,
                           edges)

    ld = graph.left_degrees()
    rd = graph.right_degrees()
    with np.errstate(divide="ignore"):
        left_dev = np.abs(np.log2(ld.astype(float)) / n - facts.r2p)
        right_dev = np.abs(np.log2(rd.astype(float)) / n - facts.r1p)
    lbad = np.nonzero(~(left_dev <= config.eps_prime))[0]
    rbad = np.nonzero(~(right_dev <= config.eps_prime))[0]
    degree_report = DegreeReport(
        facts.r1p, facts.r2p, config.eps_prime,
        tuple((int(v + 1), int(ld[v])) for v in lbad),
        tuple((int(v + 1), int(rd[v])) for v in rbad),
        len(lbad) / graph.v1_size,
        len(rbad) / graph.v2_size,
    )

    w_left = _floor_pow(n, config.r1 + config.r2 - facts.degree_sum + config.eps_prime)
    w_right = w_left
    pairs = graph.edges()
    super_left = (pairs[:, 0] - 1) // w_left
    super_right = (pairs[:, 1] - 1) // w_right
    n_sl = -(-graph.v1_size // w_left)
    n_sr = -(-graph.v2_size // w_right)
    occ_l = np.zeros((n_sl, graph.v2_size), dtype=np.int64)
    np.add.at(occ_l, (super_left, pairs[:, 1] - 1), 1)
    occ_r = np.zeros((graph.v1_size, n_sr), dtype=np.int64)
    np.add.at(occ_r, (pairs[:, 0] - 1, super_right), 1)
    super_bins = SuperBinStats(
        w_left, w_right,
        float((occ_l == 0).mean()), float((occ_r == 0).mean()),
        float(occ_l.mean()), float(occ_r.mean()),
        graph.edge_count,
    )

    diagnostics = BuildDiagnostics(
        math.log2(block_count) / n,
        math.log2(left_bins) / n,
        math.log2(right_bins) / n,
        count_left, count_right, bin_size_left, bin_size_right,
        tuple(edges_per_block), tuple(dropped), tuple(empty_blocks),
        degree_report, super_bins, facts,
    )
    codebook = ChannelCodebook(
        channel, config, joint, z_list,
        tuple(u_collections), tuple(v_collections),
        block_count, left_bins, right_bins, bin_size_left, bin_size_right,
        graph, codewords, chosen_pairs,
    )
    return codebook, diagnostics


# ---------------------------------------------------------------------------
# encode / transmit / decode


def channel_encode(codebook: ChannelCodebook, m: int, i: int, j: int) -> np.ndarray:
    """Codeword lookup for message triple (m, i, j); rejects non-edges."""
    if not (1 <= m <= codebook.block_count and 1 <= i <= codebook.left_bins
            and 1 <= j <= codebook.right_bins):
        raise InvalidMessageError(f"message triple out of range: {(m, i, j)}")
    left = (m - 1) * codebook.left_bins + i
    right = (m - 1) * codebook.right_bins + j
    code = (left - 1) * codebook.graph.v2_size + (right - 1)
    xn = codebook.codewords.get(code)
    if xn is None:
        raise InvalidMessageError(f"triple {(m, i, j)} is not an edge")
    return xn


def channel_transmit(channel: BroadcastChannel, xn, rng):
    """One memoryless use per letter; returns (y1^n, y2^n)."""
    xn = np.asarray(xn, dtype=np.int64)
    if xn.size and (xn.min() < 0 or xn.max() >= channel.x_alphabet.size):
        raise ValueError("input symbol out of range")
    cum = channel.cumulative_rows()
    sy2 = channel.y2_alphabet.size
    y1 = np.empty(xn.size, dtype=np.int64)
    y2 = np.empty(xn.size, dtype=np.int64)
    for t, x in enumerate(xn):
        flat = int(np.searchsorted(cum[x], rng.random(), side="right"))
        y1[t] = flat // sy2
        y2[t] = flat % sy2
    return y1, y2


def _bounds_for(codebook: ChannelCodebook, keep: tuple):
    cache = getattr(codebook, "_decode_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(codebook, "_decode_cache", cache)
    if keep not in cache:
        params = TypicalityParams(codebook.config.effective_decode_eps,
                                  codebook.config.n)
        marg = codebook.joint.marginal(keep)
        lo, hi = count_bounds(marg, params)
        cache[keep] = (lo.reshape(-1), hi.reshape(-1),
                       tuple(a.size for a in marg.axes))
    return cache[keep]


def _typical_row_mask(rows: np.ndarray, fixed_code: np.ndarray, lo, hi,
                      stride: int, ncells: int) -> np.ndarray:
    count = rows.shape[0]
    if count == 0:
        return np.zeros(0, dtype=bool)
    full = rows * stride + fixed_code[None, :]
    offs = (np.arange(count, dtype=np.int64) * ncells)[:, None]
    cnt = np.bincount((full + offs).ravel(), minlength=count * ncells)
    cnt = cnt.reshape(count, ncells)
    return ((cnt >= lo[None, :]) & (cnt <= hi[None, :])).all(axis=1)


def channel_decode(codebook: ChannelCodebook, receiver: int, yn):
    """Two-stage decode for receiver 1 or 2.

    Returns (m_hat, bin_index) on success, None on failure (no candidate or
    several at either stage).
    """
    if receiver not in (1, 2):
        raise ValueError("receiver must be 1 or 2")
    yn = np.asarray(yn, dtype=np.int64)
    y_axis = 4 if receiver == 1 else 5
    # stage 1: unique block whose shared sequence is typical with yn
    lo, hi, sizes = _bounds_for(codebook, (0, y_axis))
    sy = sizes[1]
    mask = _typical_row_mask(codebook.z_list, yn, lo, hi, sy, sizes[0] * sy)
    hits = np.nonzero(mask)[0]
    if hits.size != 1:
        return None
    m_hat = int(hits[0])
    zn = codebook.z_list[m_hat]

    if receiver == 1:
        rows = codebook.u_collections[m_hat]
        keep = (1, y_axis, 0)
        bin_size = codebook.bin_size_left
    else:
        rows = codebook.v_collections[m_hat]
        keep = (2, y_axis, 0)
        bin_size = codebook.bin_size_right
    lo, hi, sizes = _bounds_for(codebook, keep)
    sz = sizes[2]
    fixed = yn * sz + zn
    mask = _typical_row_mask(rows, fixed, lo, hi, sizes[1] * sz,
                             sizes[0] * sizes[1] * sz)
    hits = np.nonzero(mask)[0]
    if hits.size != 1:
        return None
    return m_hat + 1, int(hits[0]) // bin_size + 1


# ---------------------------------------------------------------------------
# error rate


@dataclass(frozen=True)
class ErrorRateEstimate:
    tau: float
    wilson_low: float
    wilson_high: float
    trials: int
    errors: int
    receiver1_errors: int
    receiver2_errors: int


def _wilson(errors: int, trials: int, z: float = 1.959963984540054):
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    den = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, center - half), min(1.0, center + half)


def _run_trials(codebook, channel, edge_codes, seed):
    rng = random.Random(seed)
    errs = e1 = e2 = 0
    v2 = codebook.graph.v2_size
    for code in edge_codes:
        m, i, j = codebook.edge_message(int(code))
        xn = codebook.codewords[int(code)]
        y1, y2 = channel_transmit(channel, xn, rng)
        d1 = channel_decode(codebook, 1, y1)
        d2 = channel_decode(codebook, 2, y2)
        bad1 = d1 != (m, i)
        bad2 = d2 != (m, j)
        e1 += bad1
        e2 += bad2
        errs += bad1 or bad2
    return errs, e1, e2


def estimate_error_rate(codebook: ChannelCodebook, channel: BroadcastChannel,
                        trials: int, rng, threads: int = 1) -> ErrorRateEstimate:
    """Monte Carlo edge-average error: uniform edge draws, transmit, decode
    both receivers, count joint mismatches. Chunked so the result does not
    depend on the thread count."""
    if trials < 1:
        raise ValueError("need at least one trial")
    codes = codebook.graph.edge_codes()
    if codes.size == 0:
        # nothing can be transmitted; every trial fails by convention
        lo, hi = _wilson(trials, trials)
        return ErrorRateEstimate(1.0, lo, hi, trials, trials, trials, trials)
    draws = [codes[rng.randrange(codes.size)] for _ in range(trials)]
    chunk = max(1, min(256, trials))
    jobs = []
    for start in range(0, trials, chunk):
        jobs.append((draws[start:start + chunk], rng.getrandbits(63)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda sj: _run_trials(codebook, channel, sj[0], sj[1]), jobs))
    else:
        results = [_run_trials(codebook, channel, c, s) for c, s in jobs]
    errs = sum(r[0] for r in results)
    e1 = sum(r[1] for r in results)
    e2 = sum(r[2] for r in results)
    lo, hi = _wilson(errs, trials)
    return ErrorRateEstimate(errs / trials, lo, hi, trials, errs, e1, e2)


# ---------------------------------------------------------------------------
# the exact hand-built code at block length 1


@dataclass(frozen=True)
class ExactCode:
    graph: BipartiteGraph
    encoder: dict
    decoder1: dict
    decoder2: dict
    channel: BroadcastChannel


def blackwell_exact_code() -> ExactCode:
    """Three-edge zero-error code: source pairs map straight onto channel
    inputs and each receiver reads its component off its output."""
    graph = BipartiteGraph(2, 2, [(1, 1), (1, 2), (2, 2)])
    encoder = {(0, 0): 0, (0, 1): 1, (1, 1): 2}
    decoder = {0: 0, 1: 1}
    return ExactCode(graph, encoder, decoder, dict(decoder), blackwell_channel())


def exact_code_error(code: ExactCode) -> float:
    """Edge-average error of the n=1 code, by exhaustive enumeration over
    edges and positive-probability channel outputs."""
    rows = code.channel.transition.rows
    bad = 0.0
    edges = code.graph.edges()
    for u, v in edges:
        s, t = u - 1, v - 1
        x = code.encoder[(s, t)]
        for y1 in range(code.channel.y1_alphabet.size):
            for y2 in range(code.channel.y2_alphabet.size):
                p = rows[x, y1, y2]
                if p > 0 and (code.decoder1[y1] != s or code.decoder2[y2] != t):
                    bad += p
    return bad / len(edges)

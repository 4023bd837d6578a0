"""Strong typicality with exact counting and exactly-uniform sampling.

Convention (fixed): a length-n sequence is strongly typical for pmf p iff
for every symbol a

    |N(a)/n - p(a)| <= eps / |alphabet|      and      N(a) = 0 when p(a) = 0.

Joint typicality applies the same test to the tuple-valued sequence against
the joint pmf (the alphabet is the set of tuples), so joint typicality
implies marginal typicality at the same eps.

Counting and sampling go through integer type enumeration.  The number of
typical sequences is a sum of exact multinomial coefficients over the count
vectors inside the band, so set sizes are exact integers and sampling is
exactly uniform: pick a type with probability proportional to its class
size, then a uniformly random arrangement of it.  Conditioning on a fixed
sequence factorizes both steps over that sequence's symbol classes, since
the band constrains each joint cell independently.

Python's ``random.Random`` is the rng type throughout: its ``randrange``
is exact on arbitrary-precision class sizes, which numpy generators are not.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTypicalSetError, ResourceLimitError
from .probability import JointPmf, entropy

CONVENTION = "linf-count-band eps/alphabet-size, zero-mass symbols excluded"

MAX_FEASIBLE_TYPES = 10_000_000


@dataclass(frozen=True)
class TypicalityParams:
    """Blocklength and slack for one typicality context."""

    eps: float
    n: int
    convention: str = CONVENTION

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.convention != CONVENTION:
            raise ValueError(f"unsupported typicality convention {self.convention!r}")


@dataclass(frozen=True)
class TypeHistogram:
    """Symbol counts of one sequence."""

    counts: np.ndarray
    n: int

    @classmethod
    def from_sequence(cls, seq, alphabet_size: int) -> "TypeHistogram":
        arr = np.asarray(seq, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("sequence must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= alphabet_size):
            raise ValueError("sequence symbol outside alphabet")
        return cls(np.bincount(arr, minlength=alphabet_size), int(arr.size))


def _cell_bounds(p_flat: np.ndarray, n: int, eps: float):
    """Inclusive integer count bounds per symbol cell under the band."""
    band = eps / p_flat.size
    lo = np.maximum(np.ceil(n * (p_flat - band) - 1e-9).astype(np.int64), 0)
    hi = np.minimum(np.floor(n * (p_flat + band) + 1e-9).astype(np.int64), n)
    zero = p_flat == 0.0
    lo[zero] = 0
    hi[zero] = 0
    return lo, hi


def _counts_in_band(counts: np.ndarray, p_flat: np.ndarray, n: int, eps: float) -> bool:
    lo, hi = _cell_bounds(p_flat, n, eps)
    return bool(np.all(counts >= lo) and np.all(counts <= hi))


def count_bounds(pmf: JointPmf, params: TypicalityParams):
    """Inclusive per-cell count bounds (lo, hi), shaped like ``pmf.mass``.

    A sequence of tuple codes is typical iff every cell count lies in the
    band; zero-mass cells must not appear at all.
    """
    lo, hi = _cell_bounds(pmf.flat(), params.n, params.eps)
    return lo.reshape(pmf.mass.shape), hi.reshape(pmf.mass.shape)


def _ravel_sequences(seqs, sizes) -> np.ndarray:
    """Zip per-axis sequences into one sequence of raveled tuple codes."""
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    n = arrs[0].size
    for a, size in zip(arrs, sizes):
        if a.ndim != 1 or a.size != n:
            raise ValueError("sequences must be 1-D and of equal length")
        if a.size and (a.min() < 0 or a.max() >= size):
            raise ValueError("sequence symbol outside alphabet")
    code = np.zeros(n, dtype=np.int64)
    for a, size in zip(arrs, sizes):
        code = code * size + a
    return code


def is_strongly_typical(seq, pmf: JointPmf, params: TypicalityParams) -> bool:
    """Strong typicality of a single-axis sequence against a 1-axis pmf."""
    if len(pmf.axes) != 1:
        raise ValueError("is_strongly_typical takes a single-axis pmf; "
                         "use are_jointly_typical for tuples")
    arr = np.asarray(seq, dtype=np.int64)
    if arr.size != params.n:
        raise ValueError(f"sequence length {arr.size} != params.n {params.n}")
    hist = TypeHistogram.from_sequence(arr, pmf.sizes[0])
    return _counts_in_band(hist.counts, pmf.flat(), params.n, params.eps)


def are_jointly_typical(seqs, joint: JointPmf, params: TypicalityParams) -> bool:
    """Joint typicality of per-axis sequences against their joint pmf."""
    seqs = tuple(seqs)
    if len(seqs) != len(joint.axes):
        raise ValueError(f"got {len(seqs)} sequences for {len(joint.axes)} axes")
    code = _ravel_sequences(seqs, joint.sizes)
    if code.size != params.n:
        raise ValueError(f"sequence length {code.size} != params.n {params.n}")
    counts = np.bincount(code, minlength=int(np.prod(joint.sizes)))
    return _counts_in_band(counts, joint.flat(), params.n, params.eps)


# ---------------------------------------------------------------------------
# type enumeration


def _compositions(total: int, lo, hi, budget: list[int]):
    """All count vectors with lo<=c<=hi elementwise and sum(c)=total."""
    k = len(lo)
    suf_lo = [0] * (k + 1)
    suf_hi = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suf_lo[i] = suf_lo[i + 1] + lo[i]
        suf_hi[i] = suf_hi[i + 1] + hi[i]
    out: list[tuple[int, ...]] = []

    def rec(idx: int, remaining: int, prefix: tuple[int, ...]):
        if idx == k - 1:
            if lo[idx] <= remaining <= hi[idx]:
                budget[0] -= 1
                if budget[0] < 0:
                    raise ResourceLimitError(
                        f"more than {MAX_FEASIBLE_TYPES} feasible types")
                out.append(prefix + (remaining,))
            return
        start = max(lo[idx], remaining - suf_hi[idx + 1])
        stop = min(hi[idx], remaining - suf_lo[idx + 1])
        for c in range(start, stop + 1):
            rec(idx + 1, remaining - c, prefix + (c,))

    if k:
        rec(0, total, ())
    return out


class ConditionalTypeFamily:
    """Feasible joint types of free axes given a fixed conditioning sequence.

    ``joint`` spans free axes plus conditioning axes; ``given_axes`` names the
    conditioning ones and ``given_seq`` fixes their (tuple-valued) sequence.
    With no conditioning axes this is the plain typical set of ``joint``.

    The object holds, for every conditioning-symbol class, the feasible count
    vectors over the free cells together with exact multinomial weights, from
    which it answers ``size`` exactly and draws exactly uniform samples.
    """

    def __init__(self, joint: JointPmf, params: TypicalityParams,
                 given_axes=(), given_seq=None,
                 max_types: int = MAX_FEASIBLE_TYPES):
        given_axes = tuple(given_axes)
        free_axes = tuple(i for i in range(len(joint.axes)) if i not in given_axes)
        if not free_axes:
            raise ValueError("at least one free axis is required")
        self.joint = joint
        self.params = params
        self.given_axes = given_axes
        self.free_axes = free_axes
        self.free_sizes = tuple(joint.sizes[i] for i in free_axes)
        given_sizes = tuple(joint.sizes[i] for i in given_axes)
        n = params.n

        # cells laid out as (free-code, given-code)
        p = np.moveaxis(joint.mass, free_axes + given_axes,
                        range(len(joint.axes)))
        n_free = int(np.prod(self.free_sizes))
        n_given = int(np.prod(given_sizes)) if given_sizes else 1
        p = p.reshape(n_free, n_given)
        lo, hi = _cell_bounds(p.reshape(-1), n, params.eps)
        lo = lo.reshape(n_free, n_given)
        hi = hi.reshape(n_free, n_given)

        if given_axes:
            if given_seq is None:
                raise ValueError("given_seq is required when conditioning")
            if not isinstance(given_seq, (tuple, list)):
                given_seq = (given_seq,)
            code = _ravel_sequences(given_seq, given_sizes)
            if code.size != n:
                raise ValueError(f"conditioning length {code.size} != n {n}")
        else:
            code = np.zeros(n, dtype=np.int64)

        counts_g = np.bincount(code, minlength=n_given)
        self._positions = [np.flatnonzero(code == g) for g in range(n_given)]

        # unseen conditioning symbols force zero counts in their column
        self._empty = bool(np.any(lo[:, counts_g == 0] > 0))

        fact = [math.factorial(i) for i in range(n + 1)]
        budget = [max_types]
        self._groups = []  # (g, comps list, weights, cumulative, total)
        est = 0
        for g in range(n_given):
            ng = int(counts_g[g])
            if ng == 0:
                continue
            widths = np.maximum(hi[:, g] - lo[:, g] + 1, 0)
            prod_est = 1
            for w in widths:
                prod_est *= int(w)
                if prod_est > MAX_FEASIBLE_TYPES:
                    break
            est += min(prod_est, math.comb(ng + n_free - 1, n_free - 1))
            if est > max_types:
                raise ResourceLimitError(
                    f"estimated {est} feasible types exceeds cap {max_types}")
            comps = _compositions(ng, [int(v) for v in lo[:, g]],
                                  [int(v) for v in hi[:, g]], budget)
            weights = []
            for c in comps:
                w = fact[ng]
                for ci in c:
                    w //= fact[ci]
                weights.append(w)
            cum = []
            acc = 0
            for w in weights:
                acc += w
                cum.append(acc)
            if acc == 0:
                self._empty = True
            self._groups.append((g, comps, weights, cum, acc))

    @property
    def size(self) -> int:
        """Exact number of sequences in the conditional typical set."""
        if self._empty:
            return 0
        total = 1
        for _, _, _, _, acc in self._groups:
            total *= acc
        return total

    @property
    def log2_size(self) -> float:
        s = self.size
        return math.log2(s) if s else float("-inf")

    def _draw_codes(self, rng) -> np.ndarray:
        if self.size == 0:
            raise EmptyTypicalSetError("conditional typical set is empty")
        out = np.zeros(self.params.n, dtype=np.int64)
        for g, comps, weights, cum, acc in self._groups:
            c = comps[bisect_right(cum, rng.randrange(acc))]
            bag = [f for f, cnt in enumerate(c) for _ in range(cnt)]
            rng.shuffle(bag)
            out[self._positions[g]] = bag
        return out

    def sample(self, rng):
        """One exactly-uniform draw; returns one array per free axis."""
        codes = self._draw_codes(rng)
        return self._unravel(codes)

    def sample_many(self, rng, count: int) -> np.ndarray:
        """Stack of ``count`` draws as raveled free-symbol codes, shape (count, n)."""
        out = np.empty((count, self.params.n), dtype=np.int64)
        for i in range(count):
            out[i] = self._draw_codes(rng)
        return out

    def _unravel(self, codes: np.ndarray):
        parts = []
        rem = codes
        for size in reversed(self.free_sizes):
            parts.append(rem % size)
            rem = rem // size
        parts.reverse()
        return parts[0] if len(parts) == 1 else tuple(parts)


def typical_set_size(pmf: JointPmf, params: TypicalityParams) -> int:
    """Exact cardinality of the strongly typical set (0 if empty)."""
    return ConditionalTypeFamily(pmf, params).size


def sample_typical(pmf: JointPmf, params: TypicalityParams, rng):
    """One exactly-uniform draw from the typical set of ``pmf``.

    Returns a single array for a 1-axis pmf, else one array per axis.
    """
    return ConditionalTypeFamily(pmf, params).sample(rng)


def sample_conditionally_typical(given_seq, joint: JointPmf,
                                 params: TypicalityParams, rng, given_axes=None):
    """Uniform draw of the free axes of ``joint`` compatible with ``given_seq``.

    ``given_seq`` is one sequence or a tuple of sequences; ``given_axes``
    defaults to the trailing axes of ``joint`` (one per given sequence).
    The draw is uniform over all free-axis sequences that are jointly
    typical with ``given_seq`` under ``joint``.
    """
    if not isinstance(given_seq, (tuple, list)):
        given_seq = (given_seq,)
    if given_axes is None:
        given_axes = range(len(joint.axes) - len(given_seq), len(joint.axes))
    fam = ConditionalTypeFamily(joint, params, given_axes, tuple(given_seq))
    return fam.sample(rng)


def conditional_typical_set_size(given_seq, joint: JointPmf,
                                 params: TypicalityParams, given_axes=None) -> int:
    """Exact size of the conditional typical set (0 if empty)."""
    if not isinstance(given_seq, (tuple, list)):
        given_seq = (given_seq,)
    if given_axes is None:
        given_axes = range(len(joint.axes) - len(given_seq), len(joint.axes))
    return ConditionalTypeFamily(joint, params, given_axes, tuple(given_seq)).size


# ---------------------------------------------------------------------------
# empirical sandwich deviation


@dataclass(frozen=True)
class Eps1Report:
    """Worst log-cardinality deviation from entropy over the sandwich bounds.

    Axes 0 and 1 of the measured joint are the free pair, axis 2 conditions.
    ``max_deviation`` is the empirical eps1; slack parameters downstream
    should exceed 3x this value (``suggested_slack`` applies a 3.5x factor).
    """

    per_bound: dict = field(repr=False)
    max_deviation: float
    n: int
    eps: float
    samples: int

    @property
    def suggested_slack(self) -> float:
        return 3.5 * self.max_deviation


def measure_eps1(joint: JointPmf, params: TypicalityParams, rng,
                 samples: int = 5) -> Eps1Report:
    """Measure the conditional-set size deviations for a 3-axis joint.

    For sampled typical conditioning sequences z (axis 2) the five bounds
    compare (1/n) log2 of |A(axis0|z)|, |A(axis1|z)|, |A(axis0,axis1|z)|,
    |A(axis1|axis0,z)| and |A(axis0|axis1,z)| against the matching
    conditional entropies.  An empty set counts as infinite deviation.
    """
    if len(joint.axes) != 3:
        raise ValueError("measure_eps1 needs a 3-axis joint (free, free, cond)")
    n = params.n
    h = {
        "axis0": entropy(joint, [0], [2]),
        "axis1": entropy(joint, [1], [2]),
        "pair": entropy(joint, [0, 1], [2]),
        "axis1_given_axis0": entropy(joint, [1], [0, 2]),
        "axis0_given_axis1": entropy(joint, [0], [1, 2]),
    }
    worst = {k: 0.0 for k in h}

    def dev(size: int, key: str):
        d = abs(math.log2(size) / n - h[key]) if size else float("inf")
        worst[key] = max(worst[key], d)

    p_z = joint.marginal([2])
    p_uz = joint.marginal([0, 2])
    p_vz = joint.marginal([1, 2])
    for _ in range(samples):
        z = sample_typical(p_z, params, rng)
        fam_u = ConditionalTypeFamily(p_uz, params, (1,), (z,))
        fam_v = ConditionalTypeFamily(p_vz, params, (1,), (z,))
        fam_uv = ConditionalTypeFamily(joint, params, (2,), (z,))
        dev(fam_u.size, "axis0")
        dev(fam_v.size, "axis1")
        dev(fam_uv.size, "pair")
        if fam_u.size:
            u = fam_u.sample(rng)
            dev(conditional_typical_set_size((u, z), joint, params, (0, 2)),
                "axis1_given_axis0")
        if fam_v.size:
            v = fam_v.sample(rng)
            dev(conditional_typical_set_size((v, z), joint, params, (1, 2)),
                "axis0_given_axis1")
    return Eps1Report(worst, max(worst.values()), n, params.eps, samples)


def pair_typical_matrix(left_rows, right_rows, given_seq, lo, hi, sizes,
                        chunk=512):
    """Boolean (K, L) matrix: which (left, right) row pairs are jointly
    typical alongside given_seq.

    lo/hi are per-cell count bounds for the three-axis law (left symbol,
    right symbol, given symbol); sizes are the three alphabet sizes.
    """
    su, sv, _ = sizes
    K, L = left_rows.shape[0], right_rows.shape[0]
    present = np.zeros(lo.shape[2], dtype=bool)
    present[np.unique(given_seq)] = True
    for s in np.nonzero(~present)[0]:
        if lo[:, :, s].max() > 0:
            return np.zeros((K, L), dtype=bool)
    typ = np.ones((K, L), dtype=bool)
    for s in np.unique(given_seq):
        pos = np.nonzero(given_seq == s)[0]
        ou = (left_rows[:, pos][:, None, :] == np.arange(su)[None, :, None]).astype(np.int32)
        ov = (right_rows[:, pos][:, None, :] == np.arange(sv)[None, :, None]).astype(np.int32)
        for k0 in range(0, K, chunk):
            cnt = np.einsum("kap,lbp->klab", ou[k0:k0 + chunk], ov)
            ok = (cnt >= lo[None, None, :, :, s]) & (cnt <= hi[None, None, :, :, s])
            typ[k0:k0 + chunk] &= ok.all(axis=(2, 3))
    return typ

"""Finite-alphabet probability mass functions and information measures.

All information quantities are in bits (base-2 logs) with the convention
0*log(0) = 0.  Joint pmfs are dense ndarrays over 1..8 axes; conditional
pmfs are row-stochastic tables indexed by the conditioning tuple.

Text format
-----------
Pmfs round-trip through a line-oriented key-value format.  Lines are
``key value...``; blank lines and ``#`` comments are ignored; numeric
tokens may be floats or integer fractions like ``1/3``.

    kind joint              |    kind conditional
    axes 2 2                |    given 3
    mass 1/3 1/3 0 1/3      |    output 2 2
                            |    mass 1 0 0 0
                            |    mass 0 1 0 0
                            |    mass 0 0 0 1

``mass`` entries are row-major over the axis sizes (for conditionals:
conditioning axes first, then output axes) and may span several lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

MAX_AXES = 8
SUM_TOL = 1e-12
COMPOSE_TOL = 1e-10


@dataclass(frozen=True)
class FiniteAlphabet:
    """A finite symbol set; symbols are 0-based ints, labels are cosmetic."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("label count does not match alphabet size")


def _as_mass(mass, shape, tol) -> np.ndarray:
    arr = np.array(mass, dtype=float, copy=True)
    if arr.shape != shape:
        raise ValueError(f"mass shape {arr.shape} does not match axes {shape}")
    if np.any(arr < 0):
        raise ValueError("mass entries must be non-negative")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"mass sums to {total!r}, outside tolerance {tol}")
    return arr


@dataclass(frozen=True)
class JointPmf:
    """Joint pmf over an ordered tuple of finite alphabets."""

    axes: tuple[FiniteAlphabet, ...]
    mass: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= len(self.axes) <= MAX_AXES:
            raise ValueError(f"need 1..{MAX_AXES} axes, got {len(self.axes)}")
        shape = tuple(a.size for a in self.axes)
        object.__setattr__(self, "mass", _as_mass(self.mass, shape, self._tol))
        self.mass.setflags(write=False)

    # loosened once by compose_chain; everything else validates at 1e-12
    @property
    def _tol(self):
        return SUM_TOL

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    def marginal(self, keep) -> "JointPmf":
        """Marginal over the axis indices in ``keep`` (order preserved)."""
        keep = tuple(keep)
        if len(set(keep)) != len(keep) or not keep:
            raise ValueError("axis subset must be non-empty and duplicate-free")
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        collapsed = self.mass.sum(axis=drop) if drop else self.mass
        collapsed = np.moveaxis(collapsed, [sorted(keep).index(k) for k in keep],
                                range(len(keep)))
        # type(self) keeps the looser tolerance for composed pmfs
        return type(self)(tuple(self.axes[i] for i in keep), collapsed)

    def flat(self) -> np.ndarray:
        """Row-major 1-D view of the mass."""
        return self.mass.reshape(-1)


class _ComposedPmf(JointPmf):
    @property
    def _tol(self):
        return COMPOSE_TOL


@dataclass(frozen=True)
class ConditionalPmf:
    """Row-stochastic table p(output | given), one row per conditioning tuple."""

    given_axes: tuple[FiniteAlphabet, ...]
    output_axes: tuple[FiniteAlphabet, ...]
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.output_axes:
            raise ValueError("need at least one output axis")
        if len(self.given_axes) + len(self.output_axes) > MAX_AXES:
            raise ValueError(f"more than {MAX_AXES} total axes")
        gshape = tuple(a.size for a in self.given_axes)
        oshape = tuple(a.size for a in self.output_axes)
        arr = np.array(self.rows, dtype=float, copy=True)
        if arr.shape != gshape + oshape:
            raise ValueError(f"rows shape {arr.shape} != {gshape + oshape}")
        if np.any(arr < 0):
            raise ValueError("conditional mass entries must be non-negative")
        sums = arr.reshape(int(np.prod(gshape, dtype=int)) if gshape else 1, -1).sum(axis=1)
        bad = np.abs(sums - 1.0) > SUM_TOL
        if np.any(bad):
            raise ValueError(f"{int(bad.sum())} conditional rows do not sum to 1")
        object.__setattr__(self, "rows", arr)
        arr.setflags(write=False)

    @property
    def given_sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.given_axes)

    @property
    def output_sizes(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.output_axes)


# ---------------------------------------------------------------------------
# information measures


def _entropy_of(mass: np.ndarray) -> float:
    p = mass.reshape(-1)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def entropy(pmf: JointPmf, over, given=()) -> float:
    """Conditional entropy H(over | given) in bits.

    ``over`` and ``given`` are disjoint axis-index lists of ``pmf``.
    """
    over, given = tuple(over), tuple(given)
    if set(over) & set(given):
        raise ValueError("over and given must be disjoint")
    joint = pmf.marginal(over + given)
    h_joint = _entropy_of(joint.mass)
    if not given:
        return h_joint
    return h_joint - _entropy_of(pmf.marginal(given).mass)


def mutual_information(pmf: JointPmf, a, b, given=()) -> float:
    """Conditional mutual information I(a; b | given) in bits, clamped at 0."""
    a, b, given = tuple(a), tuple(b), tuple(given)
    if (set(a) & set(b)) or (set(a) & set(given)) or (set(b) & set(given)):
        raise ValueError("axis groups must be pairwise disjoint")
    value = entropy(pmf, a, given) - entropy(pmf, a, b + given)
    # mathematically >= 0; tiny negatives are cancellation noise
    return max(0.0, value)


def binary_entropy(p: float) -> float:
    """h(p) = -p log p - (1-p) log(1-p), in bits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


# ---------------------------------------------------------------------------
# composition


def extend(joint: JointPmf, cond: ConditionalPmf, given) -> JointPmf:
    """Chain a conditional onto a joint: p(x) * p(y | x_given) over (x, y).

    ``given`` lists the axis indices of ``joint`` that the conditional is
    conditioned on; they must match its given_axes sizes in order.  The
    output axes are appended after the existing ones.
    """
    given = tuple(given)
    if tuple(joint.axes[i].size for i in given) != cond.given_sizes:
        raise ValueError("conditioning axes do not match the conditional's given sizes")
    n_j = len(joint.axes)
    n_o = len(cond.output_axes)
    if n_j + n_o > MAX_AXES:
        raise ValueError(f"composition would exceed {MAX_AXES} axes")
    letters = "abcdefgh"
    j_sub = letters[:n_j]
    o_sub = letters[n_j:n_j + n_o]
    c_sub = "".join(j_sub[i] for i in given) + o_sub
    mass = np.einsum(f"{j_sub},{c_sub}->{j_sub}{o_sub}", joint.mass, cond.rows)
    return _ComposedPmf(joint.axes + cond.output_axes, mass)


def compose_chain(pz: JointPmf, puv_given_z: ConditionalPmf,
                  px_given_zuv: ConditionalPmf, channel: ConditionalPmf) -> JointPmf:
    """Full system law p(z)p(u,v|z)p(x|z,u,v)p(y1,y2|x) over (Z,U,V,X,Y1,Y2)."""
    if len(pz.axes) != 1:
        raise ValueError("pz must be a single-axis pmf")
    if len(puv_given_z.output_axes) != 2 or len(px_given_zuv.output_axes) != 1:
        raise ValueError("expected p(u,v|z) with two outputs and p(x|z,u,v) with one")
    if len(channel.given_axes) != 1 or len(channel.output_axes) != 2:
        raise ValueError("channel must be p(y1,y2|x)")
    zuv = extend(pz, puv_given_z, (0,))
    zuvx = extend(zuv, px_given_zuv, (0, 1, 2))
    return extend(zuvx, channel, (3,))


# ---------------------------------------------------------------------------
# text format


def _parse_number(token: str) -> float:
    if "/" in token:
        return float(Fraction(token))
    return float(token)


def _read_kv(path) -> dict[str, list[str]]:
    fields: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            key, values = parts[0], parts[1:]
            if not values:
                raise ValueError(f"{path}:{lineno}: key {key!r} has no value")
            fields.setdefault(key, []).extend(values)
    return fields


def load_pmf(path) -> JointPmf | ConditionalPmf:
    """Load a joint or conditional pmf from the text format."""
    fields = _read_kv(path)
    kind = fields.get("kind", ["joint"])
    if kind[-1] == "joint":
        if "axes" not in fields:
            raise ValueError(f"{path}: joint pmf needs an 'axes' line")
        sizes = [int(t) for t in fields["axes"]]
        mass = [_parse_number(t) for t in fields.get("mass", [])]
        expected = int(np.prod(sizes))
        if len(mass) != expected:
            raise ValueError(f"{path}: expected {expected} mass entries, got {len(mass)}")
        return JointPmf(tuple(FiniteAlphabet(s) for s in sizes),
                        np.array(mass).reshape(sizes))
    if kind[-1] == "conditional":
        if "given" not in fields or "output" not in fields:
            raise ValueError(f"{path}: conditional pmf needs 'given' and 'output' lines")
        g = [int(t) for t in fields["given"]]
        o = [int(t) for t in fields["output"]]
        mass = [_parse_number(t) for t in fields.get("mass", [])]
        expected = int(np.prod(g + o))
        if len(mass) != expected:
            raise ValueError(f"{path}: expected {expected} mass entries, got {len(mass)}")
        return ConditionalPmf(tuple(FiniteAlphabet(s) for s in g),
                              tuple(FiniteAlphabet(s) for s in o),
                              np.array(mass).reshape(g + o))
    raise ValueError(f"{path}: unknown pmf kind {kind[-1]!r}")


def save_pmf(pmf: JointPmf | ConditionalPmf, path) -> None:
    """Write a pmf in the text format (bit-exact round trip via repr floats)."""
    lines = []
    if isinstance(pmf, JointPmf):
        lines.append("kind joint")
        lines.append("axes " + " ".join(str(s) for s in pmf.sizes))
        flat = pmf.mass.reshape(-1)
    elif isinstance(pmf, ConditionalPmf):
        lines.append("kind conditional")
        lines.append("given " + " ".join(str(s) for s in pmf.given_sizes))
        lines.append("output " + " ".join(str(s) for s in pmf.output_sizes))
        flat = pmf.rows.reshape(-1)
    else:
        raise ValueError(f"cannot save object of type {type(pmf).__name__}")
    lines.append("mass " + " ".join(repr(float(v)) for v in flat))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

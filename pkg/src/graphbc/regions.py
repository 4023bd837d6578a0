"""Rate-region evaluation, membership search, and common-information optimization.

Each supported region kind fixes a channel and/or a source and leaves a family
of auxiliary distributions free.  ``evaluate_constraints`` computes every
information quantity in the kind's defining display exactly from the composed
joint; ``membership`` searches the auxiliary family for a witness admitting a
given rate point.  Membership in a union-over-auxiliary region can only be
certified positively: a failed search reports not-found-within-budget, never
"false".  The one negative certificate offered is ``refute_gw_outer``, which
bounds the converse region from outside by grid plus multistart search.

All rates and information quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .broadcast import AuxChain, BroadcastChannel
from .graywyner import SourcePair
from .probability import (
    ConditionalPmf,
    FiniteAlphabet,
    JointPmf,
    compose_chain,
    entropy,
    extend,
    mutual_information,
)

TOL = 1e-9

KINDS = (
    "marton",
    "bc_inner",
    "semi_det",
    "det_bc",
    "gw_classic",
    "gw_inner",
    "gw_outer",
    "han_costa",
)

_CHANNEL_KINDS = {"marton", "bc_inner", "semi_det", "det_bc"}
_SOURCE_KINDS = {"gw_classic", "gw_inner", "gw_outer"}
# kinds whose display carries the degree-sum equality R1 + R2' = R1' + R2
_COUPLED_KINDS = {"bc_inner", "semi_det", "det_bc", "gw_outer"}


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class RateTuple5:
    """Operating point (common, left, right, left-degree, right-degree).

    The first three are message rates; the last two are the per-vertex degree
    exponents of the interface graph.  Degree rates never exceed their side's
    private rate.
    """

    r0: float
    r1: float
    r2: float
    r1p: float
    r2p: float

    def __post_init__(self):
        for name in ("r0", "r1", "r2", "r1p", "r2p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.r1p > self.r1 + TOL:
            raise ValueError("left degree rate exceeds the left private rate")
        if self.r2p > self.r2 + TOL:
            raise ValueError("right degree rate exceeds the right private rate")

    @property
    def coupling_residual(self) -> float:
        """(r1 + r2p) - (r1p + r2); zero for degree-coupled tuples."""
        return (self.r1 + self.r2p) - (self.r1p + self.r2)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.r0, self.r1, self.r2, self.r1p, self.r2p)


@dataclass(frozen=True)
class RegionSpec:
    """A region kind plus its fixed problem data and auxiliary alphabet sizes.

    Aux sizes default per kind: the channel-side kinds use |X|+2 for every
    auxiliary alphabet (a heuristic default; only the single-aux semi_det
    size is a proven sufficient bound), source-side kinds use |S||T| (proven
    sufficient), and the transmissibility check uses 4 per auxiliary
    (no proven bound; configurable).
    """

    kind: str
    channel: BroadcastChannel | None = None
    source: SourcePair | None = None
    z_size: int | None = None
    u_size: int | None = None
    v_size: int | None = None
    w_size: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        needs_channel = self.kind in _CHANNEL_KINDS or self.kind == "han_costa"
        needs_source = self.kind in _SOURCE_KINDS or self.kind == "han_costa"
        if needs_channel and self.channel is None:
            raise ValueError(f"kind {self.kind!r} requires a channel")
        if needs_source and self.source is None:
            raise ValueError(f"kind {self.kind!r} requires a source")
        fill = lambda field, value: object.__setattr__(self, field, value)
        if self.kind in ("marton", "bc_inner"):
            cap = self.channel.x_alphabet.size + 2
            if self.z_size is None:
                fill("z_size", cap)
            if self.u_size is None:
                fill("u_size", cap)
            if self.v_size is None:
                fill("v_size", cap)
        elif self.kind == "semi_det":
            cap = self.channel.x_alphabet.size + 2
            if self.v_size is None:
                fill("v_size", cap)
            if self.v_size > cap:
                raise ValueError(f"semi_det auxiliary size must be <= |X|+2 = {cap}")
        elif self.kind in _SOURCE_KINDS:
            cap = self.source.s_alphabet.size * self.source.t_alphabet.size
            if self.z_size is None:
                fill("z_size", cap)
            if self.z_size > cap:
                raise ValueError(f"shared-layer size must be <= |S||T| = {cap}")
        elif self.kind == "han_costa":
            for field in ("w_size", "u_size", "v_size"):
                if getattr(self, field) is None:
                    fill(field, 4)
        for field in ("z_size", "u_size", "v_size", "w_size"):
            value = getattr(self, field)
            if value is not None and value < 1:
                raise ValueError(f"{field} must be >= 1")


@dataclass(frozen=True)
class ConstraintRecord:
    """Every information quantity of a kind's display, plus the composite bounds.

    ``direction`` says how a rate point is tested against ``bounds``:
    "caps" for channel-side regions (rates stay below), "floors" for
    source-side regions (rates stay above).
    """

    kind: str
    direction: str
    quantities: tuple[tuple[str, float], ...]
    bounds: tuple[tuple[str, float], ...]

    def bound(self, name: str) -> float:
        return dict(self.bounds)[name]

    def quantity(self, name: str) -> float:
        return dict(self.quantities)[name]


# ---------------------------------------------------------------------------
# constraint evaluation


def _aux_error(kind: str, detail: str):
    return ValueError(f"auxiliary parameters do not fit kind {kind!r}: {detail}")


def _composed_joint(spec: RegionSpec, aux) -> JointPmf:
    """Compose the full joint law for the spec's kind; validates aux shape."""
    kind = spec.kind
    if kind in ("marton", "bc_inner"):
        if not isinstance(aux, AuxChain):
            raise _aux_error(kind, "expected a three-stage auxiliary chain")
        sizes = (aux.pz.sizes[0],) + aux.puv_given_z.output_sizes
        if sizes != (spec.z_size, spec.u_size, spec.v_size):
            raise _aux_error(kind, f"alphabet sizes {sizes} != "
                                   f"{(spec.z_size, spec.u_size, spec.v_size)}")
        return compose_chain(aux.pz, aux.puv_given_z, aux.px_given_zuv,
                             spec.channel.transition)
    if kind == "semi_det":
        if not isinstance(aux, JointPmf) or len(aux.axes) != 2:
            raise _aux_error(kind, "expected a two-axis joint (aux, input)")
        if aux.sizes != (spec.v_size, spec.channel.x_alphabet.size):
            raise _aux_error(kind, f"joint sizes {aux.sizes} do not match")
        return extend(aux, spec.channel.transition, (1,))
    if kind == "det_bc":
        if not isinstance(aux, JointPmf) or len(aux.axes) != 1:
            raise _aux_error(kind, "expected a single-axis input law")
        if aux.sizes != (spec.channel.x_alphabet.size,):
            raise _aux_error(kind, "input law size does not match the channel")
        return extend(aux, spec.channel.transition, (0,))
    if kind in _SOURCE_KINDS:
        if not isinstance(aux, ConditionalPmf):
            raise _aux_error(kind, "expected a conditional shared layer")
        want = (spec.source.s_alphabet.size, spec.source.t_alphabet.size)
        if aux.given_sizes != want or aux.output_sizes != (spec.z_size,):
            raise _aux_error(kind, f"conditional sizes {aux.given_sizes}->"
                                   f"{aux.output_sizes} do not match")
        return extend(spec.source.joint, aux, (0, 1))
    # han_costa: p(w,u,v | s,t) then p(x | w,u,v) then the channel
    try:
        to_aux, to_input = aux
    except (TypeError, ValueError):
        raise _aux_error(kind, "expected a pair of conditionals") from None
    if not isinstance(to_aux, ConditionalPmf) or not isinstance(to_input, ConditionalPmf):
        raise _aux_error(kind, "expected a pair of conditionals")
    src = spec.source
    aux_sizes = (spec.w_size, spec.u_size, spec.v_size)
    if (to_aux.given_sizes != (src.s_alphabet.size, src.t_alphabet.size)
            or to_aux.output_sizes != aux_sizes):
        raise _aux_error(kind, "first conditional sizes do not match")
    if (to_input.given_sizes != aux_sizes
            or to_input.output_sizes != (spec.channel.x_alphabet.size,)):
        raise _aux_error(kind, "second conditional sizes do not match")
    with_aux = extend(src.joint, to_aux, (0, 1))
    with_input = extend(with_aux, to_input, (2, 3, 4))
    return extend(with_input, spec.channel.transition, (5,))


def _marton_style_record(kind: str, joint: JointPmf) -> ConstraintRecord:
    # axes: shared Z=0, left aux U=1, right aux V=2, X=3, Y1=4, Y2=5
    i_shared_left = mutual_information(joint, (0,), (4,))
    i_shared_right = mutual_information(joint, (0,), (5,))
    i_left_given_shared = mutual_information(joint, (1,), (4,), given=(0,))
    i_right_given_shared = mutual_information(joint, (2,), (5,), given=(0,))
    i_cross_given_shared = mutual_information(joint, (1,), (2,), given=(0,))
    common = min(i_shared_left, i_shared_right)
    quantities = (
        ("i_shared_left", i_shared_left),
        ("i_shared_right", i_shared_right),
        ("i_left_given_shared", i_left_given_shared),
        ("i_right_given_shared", i_right_given_shared),
        ("i_cross_given_shared", i_cross_given_shared),
    )
    if kind == "marton":
        quantities += (
            ("i_shared_and_left", mutual_information(joint, (0, 1), (4,))),
            ("i_shared_and_right", mutual_information(joint, (0, 2), (5,))),
        )
        bounds = (
            ("common", common),
            ("common_plus_left", dict(quantities)["i_shared_and_left"]),
            ("common_plus_right", dict(quantities)["i_shared_and_right"]),
            ("total", common + i_left_given_shared + i_right_given_shared
             - i_cross_given_shared),
        )
    else:
        bounds = (
            ("common", common),
            ("left_private", i_left_given_shared),
            ("right_private", i_right_given_shared),
            ("degree_sum", i_left_given_shared + i_right_given_shared
             - i_cross_given_shared),
        )
    return ConstraintRecord(kind, "caps", quantities, bounds)


def _semi_det_record(joint: JointPmf) -> ConstraintRecord:
    # axes: aux V=0, X=1, Y1=2, Y2=3
    h_left_output = entropy(joint, (2,))
    i_aux_right = mutual_information(joint, (0,), (3,))
    h_left_given_aux = entropy(joint, (2,), given=(0,))
    quantities = (
        ("h_left_output", h_left_output),
        ("i_aux_right", i_aux_right),
        ("h_left_given_aux", h_left_given_aux),
    )
    bounds = (
        ("common", 0.0),
        ("left_private", h_left_output),
        ("right_private", i_aux_right),
        ("degree_sum", h_left_given_aux + i_aux_right),
    )
    return ConstraintRecord("semi_det", "caps", quantities, bounds)


def _det_bc_record(joint: JointPmf) -> ConstraintRecord:
    # axes: X=0, Y1=1, Y2=2
    h_left = entropy(joint, (1,))
    h_right = entropy(joint, (2,))
    h_both = entropy(joint, (1, 2))
    quantities = (
        ("h_left_output", h_left),
        ("h_right_output", h_right),
        ("h_pair_output", h_both),
    )
    bounds = (
        ("common", 0.0),
        ("left_private", h_left),
        ("right_private", h_right),
        ("degree_sum", h_both),
    )
    return ConstraintRecord("det_bc", "caps", quantities, bounds)


def _gw_record(kind: str, joint: JointPmf) -> ConstraintRecord:
    # axes: S=0, T=1, shared layer Z=2
    i_pair_shared = mutual_information(joint, (0, 1), (2,))
    h_left = entropy(joint, (0,), given=(2,))
    h_right = entropy(joint, (1,), given=(2,))
    quantities = (
        ("i_pair_shared", i_pair_shared),
        ("h_left_given_shared", h_left),
        ("h_right_given_shared", h_right),
    )
    bounds = (
        ("common", i_pair_shared),
        ("left_private", h_left),
        ("right_private", h_right),
    )
    if kind == "gw_inner":
        left_deg = entropy(joint, (0,), given=(1, 2))
        right_deg = entropy(joint, (1,), given=(0, 2))
        quantities += (("h_left_given_other", left_deg),
                       ("h_right_given_other", right_deg))
        bounds += (("left_degree", left_deg), ("right_degree", right_deg))
    elif kind == "gw_outer":
        h_pair = entropy(joint, (0, 1), given=(2,))
        quantities += (("h_pair_given_shared", h_pair),)
        bounds += (("degree_sum", h_pair),)
    return ConstraintRecord(kind, "floors", quantities, bounds)


def _han_costa_record(joint: JointPmf) -> ConstraintRecord:
    # axes: S=0, T=1, W=2, U=3, V=4, X=5, Y1=6, Y2=7
    h_left = entropy(joint, (0,))
    h_right = entropy(joint, (1,))
    h_pair = entropy(joint, (0, 1))
    i_left_fwd = mutual_information(joint, (0, 2, 3), (6,))
    i_left_back = mutual_information(joint, (1,), (2, 3), given=(0,))
    i_right_fwd = mutual_information(joint, (1, 2, 4), (7,))
    i_right_back = mutual_information(joint, (0,), (2, 4), given=(1,))
    i_shared_left = mutual_information(joint, (2,), (6,))
    i_shared_right = mutual_information(joint, (2,), (7,))
    i_left_given_shared = mutual_information(joint, (0, 3), (6,), given=(2,))
    i_right_given_shared = mutual_information(joint, (1, 4), (7,), given=(2,))
    i_cross_given_shared = mutual_information(joint, (0, 3), (1, 4), given=(2,))
    quantities = (
        ("h_left_source", h_left),
        ("h_right_source", h_right),
        ("h_pair_source", h_pair),
        ("i_left_forward", i_left_fwd),
        ("i_left_backward", i_left_back),
        ("i_right_forward", i_right_fwd),
        ("i_right_backward", i_right_back),
        ("i_shared_left", i_shared_left),
        ("i_shared_right", i_shared_right),
        ("i_left_given_shared", i_left_given_shared),
        ("i_right_given_shared", i_right_given_shared),
        ("i_cross_given_shared", i_cross_given_shared),
    )
    bounds = (
        ("left_entropy", i_left_fwd - i_left_back),
        ("right_entropy", i_right_fwd - i_right_back),
        ("pair_entropy", min(i_shared_left, i_shared_right)
         + i_left_given_shared + i_right_given_shared - i_cross_given_shared),
    )
    return ConstraintRecord("han_costa", "caps", quantities, bounds)


def evaluate_constraints(spec: RegionSpec, aux) -> ConstraintRecord:
    """Exact constraint record for ``spec`` at the given auxiliary parameters.

    ``aux`` is, per kind: a three-stage chain (marton, bc_inner); a two-axis
    joint over (aux, input) (semi_det); a single-axis input law (det_bc); a
    conditional shared layer given the source pair (gw kinds); or a pair of
    conditionals, sources to auxiliaries and auxiliaries to input (han_costa).
    """
    joint = _composed_joint(spec, aux)
    kind = spec.kind
    if kind in ("marton", "bc_inner"):
        return _marton_style_record(kind, joint)
    if kind == "semi_det":
        return _semi_det_record(joint)
    if kind == "det_bc":
        return _det_bc_record(joint)
    if kind in _SOURCE_KINDS:
        return _gw_record(kind, joint)
    return _han_costa_record(joint)


def semi_det_constraints(channel: BroadcastChannel, aux_input_joint: JointPmf
                         ) -> ConstraintRecord:
    """One-deterministic-receiver capacity bounds for a given p(aux, input)."""
    spec = RegionSpec("semi_det", channel=channel,
                      v_size=aux_input_joint.sizes[0])
    return evaluate_constraints(spec, aux_input_joint)


def det_bc_constraints(channel: BroadcastChannel, input_law: JointPmf
                       ) -> ConstraintRecord:
    """Fully deterministic two-receiver capacity bounds for a given input law."""
    spec = RegionSpec("det_bc", channel=channel)
    return evaluate_constraints(spec, input_law)


def mirror_right_output_aux(channel: BroadcastChannel, input_law: JointPmf
                            ) -> JointPmf:
    """Joint (aux, input) whose aux is a synchronized copy of receiver 2's output.

    For a channel whose second output is a function of the input, the composed
    aux variable coincides with that output almost surely, which collapses the
    one-deterministic-receiver bounds onto the fully deterministic ones.
    """
    if input_law.sizes != (channel.x_alphabet.size,):
        raise ValueError("input law does not match the channel input alphabet")
    right_given_x = channel.transition.rows.sum(axis=1)  # drop Y1
    mass = right_given_x.T * input_law.mass[None, :]
    return JointPmf((channel.y2_alphabet, channel.x_alphabet), mass)


# ---------------------------------------------------------------------------
# point testing


def point_slacks(record: ConstraintRecord, point: RateTuple5
                 ) -> tuple[tuple[str, float], ...]:
    """Signed slack of each bound at ``point``; >= 0 means satisfied.

    Channel-side kinds measure bound minus rate, source-side kinds the
    reverse.  The transmissibility kind compares the source entropies against
    its bounds and ignores the point.
    """
    b = dict(record.bounds)
    kind = record.kind
    if kind == "marton":
        return (
            ("common", b["common"] - point.r0),
            ("common_plus_left", b["common_plus_left"] - (point.r0 + point.r1)),
            ("common_plus_right", b["common_plus_right"] - (point.r0 + point.r2)),
            ("total", b["total"] - (point.r0 + point.r1 + point.r2)),
        )
    if kind == "bc_inner":
        return (
            ("common", b["common"] - point.r0),
            ("left_private", b["left_private"] - point.r1),
            ("right_private", b["right_private"] - point.r2),
            ("degree_sum", b["degree_sum"] - (point.r1 + point.r2p)),
        )
    if kind in ("semi_det", "det_bc"):
        return (
            ("common", b["common"] - point.r0),
            ("left_private", b["left_private"] - point.r1),
            ("right_private", b["right_private"] - point.r2),
            ("degree_sum", b["degree_sum"] - (point.r1 + point.r2p)),
        )
    if kind == "gw_classic":
        return (
            ("common", point.r0 - b["common"]),
            ("left_private", point.r1 - b["left_private"]),
            ("right_private", point.r2 - b["right_private"]),
        )
    if kind == "gw_inner":
        return (
            ("common", point.r0 - b["common"]),
            ("left_private", point.r1 - b["left_private"]),
            ("right_private", point.r2 - b["right_private"]),
            ("left_degree", point.r1p - b["left_degree"]),
            ("right_degree", point.r2p - b["right_degree"]),
        )
    if kind == "gw_outer":
        return (
            ("common", point.r0 - b["common"]),
            ("left_private", point.r1 - b["left_private"]),
            ("right_private", point.r2 - b["right_private"]),
            ("degree_sum_left", (point.r1 + point.r2p) - b["degree_sum"]),
            ("degree_sum_right", (point.r1p + point.r2) - b["degree_sum"]),
        )
    q = dict(record.quantities)
    return (
        ("left_entropy", b["left_entropy"] - q["h_left_source"]),
        ("right_entropy", b["right_entropy"] - q["h_right_source"]),
        ("pair_entropy", b["pair_entropy"] - q["h_pair_source"]),
    )


def satisfies(record: ConstraintRecord, point: RateTuple5, tol: float = TOL
              ) -> bool:
    """Non-strict test: every slack >= -tol (boundary points count)."""
    return min(s for _, s in point_slacks(record, point)) >= -tol


# ---------------------------------------------------------------------------
# auxiliary-space search


def _block_shapes(spec: RegionSpec) -> list[tuple[int, int]]:
    """Row-stochastic blocks parameterizing the kind's auxiliary family."""
    kind = spec.kind
    if kind in ("marton", "bc_inner"):
        z, u, v = spec.z_size, spec.u_size, spec.v_size
        x = spec.channel.x_alphabet.size
        return [(1, z), (z, u * v), (z * u * v, x)]
    if kind == "semi_det":
        return [(1, spec.v_size), (spec.v_size, spec.channel.x_alphabet.size)]
    if kind == "det_bc":
        return [(1, spec.channel.x_alphabet.size)]
    if kind in _SOURCE_KINDS:
        cells = spec.source.s_alphabet.size * spec.source.t_alphabet.size
        return [(cells, spec.z_size)]
    cells = spec.source.s_alphabet.size * spec.source.t_alphabet.size
    aux = spec.w_size * spec.u_size * spec.v_size
    return [(cells, aux), (aux, spec.channel.x_alphabet.size)]


def _normalized(block: np.ndarray) -> np.ndarray:
    return block / block.sum(axis=-1, keepdims=True)


def _blocks_to_aux(spec: RegionSpec, blocks: list[np.ndarray]):
    """Assemble the kind's auxiliary object from row-stochastic blocks."""
    kind = spec.kind
    if kind in ("marton", "bc_inner"):
        z_a = FiniteAlphabet(spec.z_size)
        u_a = FiniteAlphabet(spec.u_size)
        v_a = FiniteAlphabet(spec.v_size)
        x_a = spec.channel.x_alphabet
        pz = JointPmf((z_a,), _normalized(blocks[0])[0])
        puv = ConditionalPmf((z_a,), (u_a, v_a), _normalized(blocks[1]).reshape(
            spec.z_size, spec.u_size, spec.v_size))
        px = ConditionalPmf((z_a, u_a, v_a), (x_a,), _normalized(blocks[2]).reshape(
            spec.z_size, spec.u_size, spec.v_size, x_a.size))
        return AuxChain(pz, puv, px)
    if kind == "semi_det":
        v_a = FiniteAlphabet(spec.v_size)
        weights = _normalized(blocks[0])[0]
        rows = _normalized(blocks[1])
        return JointPmf((v_a, spec.channel.x_alphabet), weights[:, None] * rows)
    if kind == "det_bc":
        return JointPmf((spec.channel.x_alphabet,), _normalized(blocks[0])[0])
    if kind in _SOURCE_KINDS:
        src = spec.source
        z_a = FiniteAlphabet(spec.z_size)
        rows = _normalized(blocks[0]).reshape(src.s_alphabet.size,
                                              src.t_alphabet.size, spec.z_size)
        return ConditionalPmf((src.s_alphabet, src.t_alphabet), (z_a,), rows)
    src = spec.source
    w_a = FiniteAlphabet(spec.w_size)
    u_a = FiniteAlphabet(spec.u_size)
    v_a = FiniteAlphabet(spec.v_size)
    to_aux = ConditionalPmf(
        (src.s_alphabet, src.t_alphabet), (w_a, u_a, v_a),
        _normalized(blocks[0]).reshape(src.s_alphabet.size, src.t_alphabet.size,
                                       spec.w_size, spec.u_size, spec.v_size))
    to_input = ConditionalPmf(
        (w_a, u_a, v_a), (spec.channel.x_alphabet,),
        _normalized(blocks[1]).reshape(spec.w_size, spec.u_size, spec.v_size,
                                       spec.channel.x_alphabet.size))
    return to_aux, to_input


def _structured_inits(shapes: list[tuple[int, int]]) -> list[list[np.ndarray]]:
    """Deterministic starts: uniform rows, first-symbol rows, spread rows."""
    uniform = [np.full((r, c), 1.0 / c) for r, c in shapes]
    first = []
    spread = []
    for r, c in shapes:
        a = np.zeros((r, c))
        a[:, 0] = 1.0
        first.append(a)
        b = np.zeros((r, c))
        b[np.arange(r), np.minimum(np.arange(r), c - 1)] = 1.0
        spread.append(b)
    return [uniform, first, spread]


def _dirichlet_blocks(rng: np.random.Generator, shapes) -> list[np.ndarray]:
    return [rng.dirichlet(np.ones(c), size=r) for r, c in shapes]


def _descend(objective, blocks, cycles: int = 40, start_step: float = 1.0,
             min_step: float = 1e-3, good_enough: float | None = None):
    """Cyclic coordinate ascent on simplex rows by mixing toward vertices.

    Maximizes ``objective``; the step shrinks by half whenever a full sweep
    yields no improvement.  Mutates and returns ``blocks``.
    """
    best = objective(blocks)
    if good_enough is not None and best >= good_enough:
        return best, blocks
    step = start_step
    for _ in range(cycles):
        improved = False
        for block in blocks:
            rows, cols = block.shape
            if cols == 1:
                continue
            for r in range(rows):
                for c in range(cols):
                    old = block[r].copy()
                    cand = (1.0 - step) * old
                    cand[c] += step
                    block[r] = cand
                    val = objective(blocks)
                    if val > best + 1e-12:
                        best = val
                        improved = True
                        if good_enough is not None and best >= good_enough:
                            return best, blocks
                    else:
                        block[r] = old
        if not improved:
            step *= 0.5
            if step < min_step:
                break
    return best, blocks


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of a membership search; witness present only on success."""

    status: str  # "member" | "not-found-within-budget"
    point: RateTuple5
    margin: float  # best minimum slack found
    witness: object | None
    record: ConstraintRecord | None
    restarts_used: int

    @property
    def is_member(self) -> bool:
        return self.status == "member"


def membership(point: RateTuple5, spec: RegionSpec, restarts: int = 40,
               cycles: int = 40, seed: int = 0, tol: float = TOL
               ) -> MembershipResult:
    """Search the auxiliary family for parameters admitting ``point``.

    Random simplex restarts (preceded by a few deterministic starts) with
    cyclic coordinate refinement, maximizing the minimum constraint slack.
    Success returns the witnessing auxiliary; failure is only
    "not-found-within-budget" since the union over auxiliaries cannot be
    exhausted numerically.  Degree-coupled kinds reject points whose
    coupling residual exceeds tolerance outright.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    if spec.kind in _COUPLED_KINDS and abs(point.coupling_residual) > tol:
        return MembershipResult("not-found-within-budget", point,
                                -abs(point.coupling_residual), None, None, 0)

    shapes = _block_shapes(spec)

    def min_slack(blocks) -> float:
        record = evaluate_constraints(spec, _blocks_to_aux(spec, blocks))
        return min(s for _, s in point_slacks(record, point))

    rng = np.random.default_rng(seed)
    inits = _structured_inits(shapes)
    best_val, best_blocks = -math.inf, None
    for k in range(restarts):
        blocks = inits[k] if k < len(inits) else _dirichlet_blocks(rng, shapes)
        val, blocks = _descend(min_slack, blocks, cycles=cycles,
                               good_enough=-tol)
        if val > best_val:
            best_val, best_blocks = val, [b.copy() for b in blocks]
        if val >= -tol:
            aux = _blocks_to_aux(spec, blocks)
            return MembershipResult("member", point, val, aux,
                                    evaluate_constraints(spec, aux), k + 1)
    record = evaluate_constraints(spec, _blocks_to_aux(spec, best_blocks))
    return MembershipResult("not-found-within-budget", point, best_val, None,
                            record, restarts)


def han_costa_check(source: SourcePair, channel: BroadcastChannel,
                    w_size: int = 4, u_size: int = 4, v_size: int = 4,
                    restarts: int = 40, cycles: int = 40, seed: int = 0
                    ) -> MembershipResult:
    """Search for auxiliaries certifying direct transmissibility of the pair.

    The three conditions compare the source entropies against channel-side
    bounds; no rate point is involved, so the result's point is all-zero.
    """
    spec = RegionSpec("han_costa", channel=channel, source=source,
                      w_size=w_size, u_size=u_size, v_size=v_size)
    return membership(RateTuple5(0, 0, 0, 0, 0), spec, restarts=restarts,
                      cycles=cycles, seed=seed)


# ---------------------------------------------------------------------------
# outer-bound refutation


@dataclass(frozen=True)
class RefutationResult:
    refuted: bool
    best_margin: float
    reason: str
    evaluations: int


def refute_gw_outer(point: RateTuple5, source: SourcePair,
                    z_size: int | None = None, grid_points: int = 11,
                    restarts: int = 20, cycles: int = 30, seed: int = 0
                    ) -> RefutationResult:
    """Numerical negative certificate against the source-side converse region.

    Maximizes the minimum floor slack over shared layers via multistart
    search at the sufficient alphabet size, plus a dense grid over binary
    layers on the support cells.  If the best margin stays clearly negative
    the point lies outside the converse region, hence outside the inner
    region too.  A near-zero margin is inconclusive, not a membership claim.
    """
    if abs(point.coupling_residual) > TOL:
        return RefutationResult(True, -abs(point.coupling_residual),
                                "degree coupling violated", 0)
    spec = RegionSpec("gw_outer", source=source, z_size=z_size)
    shapes = _block_shapes(spec)

    evals = 0

    def min_slack(blocks) -> float:
        nonlocal evals
        evals += 1
        record = evaluate_constraints(spec, _blocks_to_aux(spec, blocks))
        return min(s for _, s in point_slacks(record, point))

    rng = np.random.default_rng(seed)
    best = -math.inf
    for blocks in _structured_inits(shapes):
        val, _ = _descend(min_slack, blocks, cycles=cycles, good_enough=-1e-6)
        best = max(best, val)
    for _ in range(restarts):
        val, _ = _descend(min_slack, _dirichlet_blocks(rng, shapes),
                          cycles=cycles, good_enough=-1e-6)
        best = max(best, val)
        if best >= -1e-6:
            break

    # dense binary-layer grid over the support cells
    cells = shapes[0][0]
    support = np.flatnonzero(spec.source.joint.flat() > 0)
    if best < -1e-6 and len(support) * math.log(grid_points) < math.log(5e4):
        grid_spec = RegionSpec("gw_outer", source=source, z_size=2)
        levels = np.linspace(0.0, 1.0, grid_points)
        block = np.zeros((cells, 2))
        block[:, 0] = 1.0
        for combo in np.ndindex(*(grid_points,) * len(support)):
            for cell, li in zip(support, combo):
                block[cell, 0] = levels[li]
                block[cell, 1] = 1.0 - levels[li]
            record = evaluate_constraints(grid_spec,
                                          _blocks_to_aux(grid_spec, [block]))
            evals += 1
            best = max(best, min(s for _, s in point_slacks(record, point)))
            if best >= -1e-6:
                break

    refuted = best < -1e-6
    reason = ("every searched layer leaves some floor unmet" if refuted
              else "search found a layer meeting all floors to near-tolerance")
    return RefutationResult(refuted, best, reason, evals)


# ---------------------------------------------------------------------------
# common information


@dataclass(frozen=True)
class WynerResult:
    """Best-effort upper bound on the common information of a pair."""

    bits: float
    witness: ConditionalPmf | None
    conditional_mi: float
    feasible: bool


def _wyner_eval(source: SourcePair, cond: ConditionalPmf) -> tuple[float, float]:
    joint = extend(source.joint, cond, (0, 1))
    return (mutual_information(joint, (0, 1), (2,)),
            mutual_information(joint, (0,), (1,), given=(2,)))


def _sparsify(blocks: list[np.ndarray], floor: float = 1e-9) -> list[np.ndarray]:
    out = []
    for block in blocks:
        b = np.where(block < floor, 0.0, block)
        out.append(_normalized(b))
    return out


def wyner_common_information(source: SourcePair, z_size: int,
                             restarts: int = 200, cycles: int = 40,
                             seed: int = 0, cond_tol: float = 1e-6,
                             initial_rows: np.ndarray | None = None
                             ) -> WynerResult:
    """Minimize the pair's shared-layer information rate.

    Minimizes I(pair; layer) under the near-independence constraint
    I(left; right | layer) <= cond_tol, by penalty stages inside each
    restart.  Returns the best feasible solution found; if no restart
    reaches feasibility the bits are +inf and the least-infeasible witness
    is reported.  Always an upper bound on the true infimum (up to the
    constraint relaxation).

    ``initial_rows`` optionally seeds one restart with an explicit layer
    (any array reshapable to cells x z_size), tried before the deterministic
    starts; handy for warm-starting a larger layer from a smaller one's
    witness.
    """
    if z_size < 1:
        raise ValueError("layer size must be >= 1")
    src_alpha = (source.s_alphabet, source.t_alphabet)
    cells = src_alpha[0].size * src_alpha[1].size
    shapes = [(cells, z_size)]
    z_a = FiniteAlphabet(z_size)

    def to_cond(blocks) -> ConditionalPmf:
        rows = _normalized(blocks[0]).reshape(src_alpha[0].size,
                                              src_alpha[1].size, z_size)
        return ConditionalPmf(src_alpha, (z_a,), rows)

    def objective(lam):
        def value(blocks) -> float:
            bits, cmi = _wyner_eval(source, to_cond(blocks))
            return -(bits + lam * max(0.0, cmi - cond_tol))
        return value

    rng = np.random.default_rng(seed)
    inits = _structured_inits(shapes)
    if initial_rows is not None:
        arr = np.array(initial_rows, dtype=float).reshape(cells, z_size)
        if np.any(arr < 0):
            raise ValueError("initial rows must be non-negative")
        inits.insert(0, [_normalized(arr)])
    best_key, best = None, None
    for k in range(max(1, restarts)):
        blocks = inits[k] if k < len(inits) else _dirichlet_blocks(rng, shapes)
        for lam in (16.0, 1024.0):
            _, blocks = _descend(objective(lam), blocks, cycles=cycles)
        for cand in (blocks, _sparsify(blocks)):
            bits, cmi = _wyner_eval(source, to_cond(cand))
            feasible = cmi <= cond_tol
            key = (not feasible, bits if feasible else bits + cmi)
            if best_key is None or key < best_key:
                best_key = key
                best = (bits if feasible else math.inf, to_cond(cand), cmi,
                        feasible)
    return WynerResult(*best)


@dataclass(frozen=True)
class SeparationRecord:
    """Arithmetic behind the joint-coding vs separate-coding gap."""

    pair_entropy: float
    common_information: float
    sum_rate_bound: float  # twice-common plus both privates must reach this
    per_receiver_bound: float  # half of it falls on the busier receiver link
    forces_rate_above_one: bool
    wyner: WynerResult


def separation_gap_check(source: SourcePair, z_size: int | None = None,
                         restarts: int = 200, cycles: int = 40, seed: int = 0
                         ) -> SeparationRecord:
    """Lower-bound arithmetic for any scheme that splits common and private rates.

    Computes the pair entropy and common information, their sum (a floor on
    twice the common rate plus both private rates), and whether the busier
    receiver link is forced above one bit per use, which is impossible when
    that receiver observes a binary output.
    """
    if z_size is None:
        z_size = source.s_alphabet.size * source.t_alphabet.size
    pair_entropy = entropy(source.joint, (0, 1))
    wyner = wyner_common_information(source, z_size, restarts=restarts,
                                     cycles=cycles, seed=seed)
    bound = pair_entropy + wyner.bits
    half = bound / 2.0
    return SeparationRecord(pair_entropy, wyner.bits, bound, half,
                            half > 1.0 + TOL, wyner)

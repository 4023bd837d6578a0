"""Bipartite graphs used as the interface between source and channel code
builders: construction, block-structure and degree validation, the uniform
edge-message distribution, isomorphism testing, and a plain text file format.

Vertices are 1-based on both sides. Edges are stored internally as a sorted
array of int64 codes (left-1)*v2_size + (right-1), which keeps million-edge
graphs cheap to hold and query.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import CrossBlockEdgeError, ResourceLimitError
from .probability import FiniteAlphabet, JointPmf

MAX_MESSAGE_CELLS = 20_000_000
DEFAULT_NODE_BUDGET = 2_000_000


class BipartiteGraph:
    """Immutable bipartite graph with 1-based vertex labels."""

    def __init__(self, v1_size: int, v2_size: int, edges):
        if v1_size < 1 or v2_size < 1:
            raise ValueError("both vertex sets must be non-empty")
        pairs = np.asarray(list(edges), dtype=np.int64)
        if pairs.size == 0:
            pairs = pairs.reshape(0, 2)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("edges must be (left, right) pairs")
        if pairs.size and (
            pairs[:, 0].min() < 1
            or pairs[:, 0].max() > v1_size
            or pairs[:, 1].min() < 1
            or pairs[:, 1].max() > v2_size
        ):
            raise ValueError("edge endpoint out of range")
        codes = (pairs[:, 0] - 1) * np.int64(v2_size) + (pairs[:, 1] - 1)
        codes = np.sort(codes)
        if codes.size and np.any(codes[1:] == codes[:-1]):
            raise ValueError("duplicate edge")
        self._init(v1_size, v2_size, codes)

    def _init(self, v1_size, v2_size, codes):
        self.v1_size = int(v1_size)
        self.v2_size = int(v2_size)
        self._codes = codes
        self._codes.setflags(write=False)
        self._left = None
        self._right = None

    @classmethod
    def from_edge_codes(cls, v1_size: int, v2_size: int, codes: np.ndarray):
        """Trusted constructor: ``codes`` must already be sorted and unique."""
        g = cls.__new__(cls)
        g._init(v1_size, v2_size, np.asarray(codes, dtype=np.int64))
        return g

    @property
    def edge_count(self) -> int:
        return int(self._codes.size)

    def edge_codes(self) -> np.ndarray:
        """Sorted raveled edge codes (left-1)*v2_size + (right-1), read-only."""
        return self._codes

    def _split(self):
        if self._left is None:
            self._left = self._codes // self.v2_size + 1
            self._right = self._codes % self.v2_size + 1
        return self._left, self._right

    def edges(self) -> np.ndarray:
        """All edges as an (E, 2) array of 1-based pairs, sorted."""
        left, right = self._split()
        return np.stack([left, right], axis=1)

    def left_degrees(self) -> np.ndarray:
        left, _ = self._split()
        return np.bincount(left - 1, minlength=self.v1_size)

    def right_degrees(self) -> np.ndarray:
        _, right = self._split()
        return np.bincount(right - 1, minlength=self.v2_size)

    def has_edge(self, left: int, right: int) -> bool:
        code = (left - 1) * self.v2_size + (right - 1)
        i = np.searchsorted(self._codes, code)
        return i < self._codes.size and self._codes[i] == code

    def neighbors_of_left(self, left: int) -> np.ndarray:
        lo = np.searchsorted(self._codes, (left - 1) * self.v2_size)
        hi = np.searchsorted(self._codes, left * self.v2_size)
        return (self._codes[lo:hi] % self.v2_size + 1).astype(np.int64)

    def neighbors_of_right(self, right: int) -> np.ndarray:
        left, r = self._split()
        return left[r == right]

    def same_edges(self, other: "BipartiteGraph") -> bool:
        return (
            self.v1_size == other.v1_size
            and self.v2_size == other.v2_size
            and np.array_equal(self._codes, other._codes)
        )


@dataclass(frozen=True)
class GraphParams:
    """Block count, per-block vertex-set sizes, nominal degrees, degree slack.

    Nominal degrees may be non-integer (builders report realized averages);
    the slack mu widens the admissible degree bands multiplicatively.
    """

    delta0: int
    delta1: int
    delta2: int
    delta1p: float
    delta2p: float
    mu: float

    def __post_init__(self):
        if self.delta0 < 1 or self.delta1 < 1 or self.delta2 < 1:
            raise ValueError("block count and sizes must be positive")
        if not (0 < self.delta1p <= self.delta1):
            raise ValueError("nominal left-set degree must be in (0, delta1]")
        if not (0 < self.delta2p <= self.delta2):
            raise ValueError("nominal right-set degree must be in (0, delta2]")
        if self.mu < 1:
            raise ValueError("degree slack must be at least 1")


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    size_ok: bool
    cross_block_edges: tuple
    left_degree_violations: tuple
    right_degree_violations: tuple


def validate(graph: BipartiteGraph, params: GraphParams) -> ValidationReport:
    """Check sizes, block containment of every edge, and degree bands.

    Left degrees must lie in [delta2p/mu, delta2p*mu], right degrees in
    [delta1p/mu, delta1p*mu]. Violations are reported, never raised.
    """
    size_ok = (
        params.delta0 * params.delta1 == graph.v1_size
        and params.delta0 * params.delta2 == graph.v2_size
    )
    pairs = graph.edges()
    left_block = (pairs[:, 0] - 1) // params.delta1
    right_block = (pairs[:, 1] - 1) // params.delta2
    bad = left_block != right_block
    cross = tuple(map(tuple, pairs[bad]))

    tol = 1e-9
    ld = graph.left_degrees()
    lo, hi = params.delta2p / params.mu - tol, params.delta2p * params.mu + tol
    lbad = np.nonzero((ld < lo) | (ld > hi))[0]
    left_viol = tuple((int(v + 1), int(ld[v])) for v in lbad)
    rd = graph.right_degrees()
    lo, hi = params.delta1p / params.mu - tol, params.delta1p * params.mu + tol
    rbad = np.nonzero((rd < lo) | (rd > hi))[0]
    right_viol = tuple((int(v + 1), int(rd[v])) for v in rbad)

    passed = size_ok and not cross and not left_viol and not right_viol
    return ValidationReport(passed, size_ok, cross, left_viol, right_viol)


def message_pmf(graph: BipartiteGraph, params: GraphParams) -> JointPmf:
    """Uniform distribution over edges, as a 3-axis pmf (block, left, right).

    Edge ((m-1)*delta1 + i, (m-1)*delta2 + j) carries the triple (m, i, j)
    with mass 1/|E|.
    """
    cells = params.delta0 * params.delta1 * params.delta2
    if cells > MAX_MESSAGE_CELLS:
        raise ResourceLimitError(f"message table would need {cells} cells")
    if graph.edge_count == 0:
        raise ValueError("graph has no edges")
    if params.delta0 * params.delta1 != graph.v1_size or \
            params.delta0 * params.delta2 != graph.v2_size:
        raise ValueError("params sizes do not match graph")
    pairs = graph.edges()
    m = (pairs[:, 0] - 1) // params.delta1
    m2 = (pairs[:, 1] - 1) // params.delta2
    if np.any(m != m2):
        k = int(np.nonzero(m != m2)[0][0])
        raise CrossBlockEdgeError(f"edge {tuple(pairs[k])} spans two blocks")
    i = (pairs[:, 0] - 1) % params.delta1
    j = (pairs[:, 1] - 1) % params.delta2
    mass = np.zeros((params.delta0, params.delta1, params.delta2))
    mass[m, i, j] = 1.0 / graph.edge_count
    axes = (
        FiniteAlphabet(params.delta0),
        FiniteAlphabet(params.delta1),
        FiniteAlphabet(params.delta2),
    )
    return JointPmf(axes, mass)


def block_decompose(graph: BipartiteGraph, params: GraphParams) -> list:
    """Split into delta0 per-block subgraphs re-indexed to local 1-based labels."""
    if params.delta0 * params.delta1 != graph.v1_size or \
            params.delta0 * params.delta2 != graph.v2_size:
        raise ValueError("params sizes do not match graph")
    pairs = graph.edges()
    left_block = (pairs[:, 0] - 1) // params.delta1
    right_block = (pairs[:, 1] - 1) // params.delta2
    bad = np.nonzero(left_block != right_block)[0]
    if bad.size:
        raise CrossBlockEdgeError(f"edge {tuple(pairs[bad[0]])} spans two blocks")
    out = []
    for m in range(params.delta0):
        sel = pairs[left_block == m]
        local = np.stack([
            sel[:, 0] - m * params.delta1,
            sel[:, 1] - m * params.delta2,
        ], axis=1)
        out.append(BipartiteGraph(params.delta1, params.delta2, local))
    return out


def from_joint_support(joint: JointPmf) -> BipartiteGraph:
    """Graph whose edges are the positive-mass cells of a 2-axis pmf."""
    if len(joint.axes) != 2:
        raise ValueError("support graph needs a 2-axis pmf")
    rows, cols = np.nonzero(joint.mass > 0)
    pairs = np.stack([rows + 1, cols + 1], axis=1)
    return BipartiteGraph(joint.axes[0].size, joint.axes[1].size, pairs)


# ---------------------------------------------------------------------------
# isomorphism


@dataclass(frozen=True)
class IsomorphismResult:
    isomorphic: bool
    left_perm: tuple | None = None
    right_perm: tuple | None = None


def _adjacency(graph: BipartiteGraph):
    left_adj = [frozenset() for _ in range(graph.v1_size)]
    right_adj = [frozenset() for _ in range(graph.v2_size)]
    tmp_l = [[] for _ in range(graph.v1_size)]
    tmp_r = [[] for _ in range(graph.v2_size)]
    for u, v in graph.edges():
        tmp_l[u - 1].append(v - 1)
        tmp_r[v - 1].append(u - 1)
    for k, lst in enumerate(tmp_l):
        left_adj[k] = frozenset(lst)
    for k, lst in enumerate(tmp_r):
        right_adj[k] = frozenset(lst)
    return left_adj, right_adj


def _refine_colors(adj1, adj2):
    """Joint color refinement of two graphs; returns per-vertex colors or
    None when the color histograms separate the graphs."""
    (l1, r1), (l2, r2) = adj1, adj2
    cl1, cr1 = [0] * len(l1), [1] * len(r1)
    cl2, cr2 = [0] * len(l2), [1] * len(r2)
    n_colors = 2
    while True:
        table = {}
        def recolor(adj, own, other):
            sigs = []
            for k, nbrs in enumerate(adj):
                sig = (own[k], tuple(sorted(Counter(other[j] for j in nbrs).items())))
                sigs.append(sig)
            return sigs

        out = []
        for sigs in (
            recolor(l1, cl1, cr1),
            recolor(r1, cr1, cl1),
            recolor(l2, cl2, cr2),
            recolor(r2, cr2, cl2),
        ):
            colored = []
            for sig in sigs:
                if sig not in table:
                    table[sig] = len(table)
                colored.append(table[sig])
            out.append(colored)
        cl1, cr1, cl2, cr2 = out
        if Counter(cl1) != Counter(cl2) or Counter(cr1) != Counter(cr2):
            return None
        if len(table) == n_colors:
            return cl1, cr1, cl2, cr2
        n_colors = len(table)


def are_isomorphic(g1: BipartiteGraph, g2: BipartiteGraph,
                   node_budget: int = DEFAULT_NODE_BUDGET) -> IsomorphismResult:
    """Exact isomorphism with the bipartition respected (sides never swap).

    Color refinement prunes, then backtracking completes the search. The
    budget counts candidate trials; exceeding it raises ResourceLimitError
    rather than returning a verdict.
    """
    if (g1.v1_size, g1.v2_size, g1.edge_count) != (g2.v1_size, g2.v2_size, g2.edge_count):
        return IsomorphismResult(False)
    adj1 = _adjacency(g1)
    adj2 = _adjacency(g2)
    refined = _refine_colors(adj1, adj2)
    if refined is None:
        return IsomorphismResult(False)
    cl1, cr1, cl2, cr2 = refined

    # one unified vertex list: (side, index); side 0 = left, 1 = right
    verts1 = [(0, k) for k in range(g1.v1_size)] + [(1, k) for k in range(g1.v2_size)]
    color1 = {(0, k): c for k, c in enumerate(cl1)} | {(1, k): c for k, c in enumerate(cr1)}
    cands = {}
    for side, k in verts1:
        pool = cl2 if side == 0 else cr2
        want = color1[(side, k)]
        cands[(side, k)] = [j for j, c in enumerate(pool) if c == want]

    # BFS order from the rarest color class: every non-seed vertex then has a
    # mapped neighbor when reached, so candidate sets shrink to intersections
    # of image adjacencies
    remaining = set(verts1)
    order = []
    while remaining:
        seed = min(remaining, key=lambda v: (len(cands[v]), v))
        remaining.discard(seed)
        queue = [seed]
        while queue:
            v = queue.pop(0)
            order.append(v)
            for j in sorted(adj1[v[0]][v[1]]):
                w = (1 - v[0], j)
                if w in remaining:
                    remaining.discard(w)
                    queue.append(w)

    mapping = {}
    used = ({}, {})
    nodes = 0

    def consistent(side, k, image):
        adj_own = adj1[side][k]
        adj_img = adj2[side][image]
        other = 1 - side
        for j, img_j in mapping.items():
            if j[0] != other:
                continue
            if (j[1] in adj_own) != (img_j in adj_img):
                return False
        return True

    def dfs(pos):
        nonlocal nodes
        if pos == len(order):
            return True
        v = order[pos]
        side = v[0]
        pool = [c for c in cands[v] if c not in used[side]]
        for j in adj1[side][v[1]]:
            img = mapping.get((1 - side, j))
            if img is not None:
                allowed = adj2[1 - side][img]
                pool = [c for c in pool if c in allowed]
        for image in pool:
            nodes += 1
            if nodes > node_budget:
                raise ResourceLimitError("isomorphism search budget exceeded")
            if consistent(side, v[1], image):
                mapping[v] = image
                used[side][image] = True
                if dfs(pos + 1):
                    return True
                del mapping[v]
                del used[side][image]
        return False

    if not dfs(0):
        return IsomorphismResult(False)

    left_perm = tuple(mapping[(0, k)] + 1 for k in range(g1.v1_size))
    right_perm = tuple(mapping[(1, k)] + 1 for k in range(g1.v2_size))
    # paranoia: the witness must map the edge set exactly
    lp = np.asarray(left_perm)
    rp = np.asarray(right_perm)
    pairs = g1.edges()
    mapped = np.stack([lp[pairs[:, 0] - 1], rp[pairs[:, 1] - 1]], axis=1)
    if not BipartiteGraph(g2.v1_size, g2.v2_size, mapped).same_edges(g2):
        raise AssertionError("isomorphism witness failed verification")
    return IsomorphismResult(True, left_perm, right_perm)


# ---------------------------------------------------------------------------
# file format: header "v1 v2 delta0", then one "left right" line per edge


def save_graph(graph: BipartiteGraph, path, delta0: int = 1) -> None:
    with open(path, "w") as fh:
        fh.write(f"{graph.v1_size} {graph.v2_size} {delta0}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")


def load_graph(path):
    """Returns (graph, delta0)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty graph file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("header must be 'v1 v2 delta0'")
    try:
        v1, v2, delta0 = (int(t) for t in head)
    except ValueError:
        raise ValueError("header must hold three integers") from None
    if v1 < 1 or v2 < 1 or delta0 < 1:
        raise ValueError("header values must be positive")
    pairs = []
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != 2:
            raise ValueError(f"bad edge line: {ln!r}")
        try:
            pairs.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise ValueError(f"bad edge line: {ln!r}") from None
    return BipartiteGraph(v1, v2, pairs), delta0

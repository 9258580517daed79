"""
Width - Covers, Tree Decompositions and Width Measures
Edge-cover LPs, AGM bounds, TD <-> ordering conversions, induced g-widths,
fractional hypertree width (exact subset DP and min-fill greedy), L-star size
and composition bounds
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from .config import DEFAULT_CONFIG, FAQConfig
from .errors import InfeasibleCoverError, InvalidDecompositionError, SizeLimitError
from .hypergraph import (EdgeId, Hypergraph, Ordering, SEMIRING_STEP, check_ordering,
                         connected_components, elimination_sequence, is_alpha_acyclic)
from .lp import maximize

logger = logging.getLogger("faq.width")

INFINITE_WIDTH = float("inf")
Width = Union[Fraction, float]


# ------------------------------------------------------------------ edge covers

@dataclass
class CoverSolution:
    weights: Dict[EdgeId, Fraction]
    objective: Fraction


def _cover_rows(hypergraph: Hypergraph, bag: FrozenSet[int]) -> List[Tuple[EdgeId, FrozenSet[int]]]:
    """Maximal distinct traces S ∩ B, each with the first edge id producing it."""
    traces: Dict[FrozenSet[int], EdgeId] = {}
    for eid, members in hypergraph.edges.items():
        trace = members & bag
        if trace and trace not in traces:
            traces[trace] = eid
    maximal = [t for t in traces if not any(t < other for other in traces)]
    return [(traces[t], t) for t in maximal]


def fractional_cover_number(hypergraph: Hypergraph, bag: Iterable[int],
                            config: Optional[FAQConfig] = None) -> CoverSolution:
    """
    ρ*_𝓗(B), exact. Solved as the packing dual max Σy_v s.t. Σ_{v∈S} y_v ≤ 1;
    the cover weights are the optimal row multipliers.
    """
    bag = frozenset(bag)
    if not bag:
        return CoverSolution({}, Fraction(0))
    rows = _cover_rows(hypergraph, bag)
    covered = frozenset().union(*(t for _, t in rows)) if rows else frozenset()
    for vertex in sorted(bag):
        if vertex not in covered:
            raise InfeasibleCoverError(vertex)
    columns = sorted(bag)
    matrix = [[1 if v in trace else 0 for v in columns] for _, trace in rows]
    result = maximize([1] * len(columns), matrix, [1] * len(rows), config)
    weights = {eid: w for (eid, _), w in zip(rows, result.dual) if w != 0}
    return CoverSolution(weights, result.value)


class RhoStar:
    """Memoized ρ*_𝓗 over one hypergraph; uncoverable sets have infinite width."""

    def __init__(self, hypergraph: Hypergraph, config: Optional[FAQConfig] = None):
        self.hypergraph = hypergraph
        self.config = config or DEFAULT_CONFIG
        self._memo: Dict[FrozenSet[int], Width] = {}

    def __call__(self, bag: Iterable[int]) -> Width:
        bag = frozenset(bag)
        if bag not in self._memo:
            try:
                self._memo[bag] = fractional_cover_number(self.hypergraph, bag, self.config).objective
            except InfeasibleCoverError:
                self._memo[bag] = INFINITE_WIDTH
        return self._memo[bag]


def integral_cover_number(hypergraph: Hypergraph, bag: Iterable[int]) -> int:
    """ρ_𝓗(B) by branch and bound on the least-covered uncovered vertex."""
    bag = frozenset(bag)
    traces = list({members & bag for members in hypergraph.edges.values() if members & bag})
    for vertex in sorted(bag):
        if not any(vertex in t for t in traces):
            raise InfeasibleCoverError(vertex)
    best = [len(bag)]

    def search(uncovered: FrozenSet[int], used: int) -> None:
        if not uncovered:
            best[0] = min(best[0], used)
            return
        if used + 1 >= best[0]:
            return
        pivot = min(sorted(uncovered), key=lambda v: sum(v in t for t in traces))
        for trace in sorted((t for t in traces if pivot in t), key=len, reverse=True):
            search(uncovered - trace, used + 1)

    search(bag, 0)
    return best[0] if bag else 0


@dataclass
class AGMBound:
    bound: float                 # size-weighted
    weights: Dict[EdgeId, float]
    uniform: float               # N^{ρ*} with N the largest size


def agm_bound(hypergraph: Hypergraph, bag: Iterable[int], sizes: Dict[EdgeId, int],
              config: Optional[FAQConfig] = None) -> AGMBound:
    """∏|ψ_S|^{λ_S} for λ minimizing Σ λ_S log₂|ψ_S| (double precision)."""
    bag = frozenset(bag)
    if not bag:
        return AGMBound(1.0, {}, 1.0)
    edge_ids = [eid for eid, members in hypergraph.edges.items() if members & bag]
    for eid in edge_ids:
        if sizes.get(eid, 0) < 1:
            raise ValueError(f"size of edge {eid!r} must be a positive integer")
    columns = sorted(bag)
    coverage = np.array([[1.0 if v in hypergraph.edges[eid] else 0.0 for eid in edge_ids]
                         for v in columns])
    if not edge_ids or (coverage.sum(axis=1) == 0).any():
        missing = columns[int(np.argmin(coverage.sum(axis=1)))] if edge_ids else columns[0]
        raise InfeasibleCoverError(missing)
    costs = np.log2(np.array([float(sizes[eid]) for eid in edge_ids]))
    result = linprog(costs, A_ub=-coverage, b_ub=-np.ones(len(columns)),
                     bounds=[(0, None)] * len(edge_ids), method="highs")
    if result.status != 0:
        raise InfeasibleCoverError(columns[0])
    rho = fractional_cover_number(hypergraph, bag, config).objective
    largest = max(sizes[eid] for eid in edge_ids)
    weights = {eid: float(w) for eid, w in zip(edge_ids, result.x) if w > 1e-9}
    return AGMBound(bound=float(2 ** result.fun), weights=weights, uniform=float(largest) ** float(rho))


# ------------------------------------------------------------------ tree decompositions

class TreeDecomposition:
    """A tree (networkx Graph over int node ids) with a bag per node."""

    def __init__(self, tree: nx.Graph, bags: Dict[int, FrozenSet[int]]):
        self.tree = tree
        self.bags = {node: frozenset(bag) for node, bag in bags.items()}

    @classmethod
    def from_lists(cls, bags: Sequence[Iterable[int]], edges: Iterable[Tuple[int, int]]) -> "TreeDecomposition":
        tree = nx.Graph()
        tree.add_nodes_from(range(len(bags)))
        tree.add_edges_from(edges)
        return cls(tree, dict(enumerate(frozenset(b) for b in bags)))

    def copy(self) -> "TreeDecomposition":
        return TreeDecomposition(self.tree.copy(), dict(self.bags))

    def nodes(self) -> List[int]:
        return sorted(self.tree.nodes)

    def bag_list(self) -> List[List[int]]:
        return sorted(sorted(bag) for bag in self.bags.values())

    def width(self, measure: Callable[[FrozenSet[int]], Width]) -> Width:
        return max((measure(bag) for bag in self.bags.values()), default=Fraction(0))

    def relabel(self) -> "TreeDecomposition":
        """Renumber nodes 0.. in sorted-bag order."""
        ordered = sorted(self.tree.nodes, key=lambda n: (sorted(self.bags[n]), n))
        mapping = {old: new for new, old in enumerate(ordered)}
        tree = nx.relabel_nodes(self.tree, mapping)
        return TreeDecomposition(tree, {mapping[n]: b for n, b in self.bags.items()})

    def __repr__(self) -> str:
        return f"TreeDecomposition(bags={self.bag_list()})"


@dataclass
class TDReport:
    valid: bool
    message: str = ""
    edge: Optional[EdgeId] = None
    vertex: Optional[int] = None

    def __bool__(self) -> bool:
        return self.valid


def validate_td(hypergraph: Hypergraph, td: TreeDecomposition) -> TDReport:
    tree = td.tree
    if tree.number_of_nodes() == 0:
        if hypergraph.edges:
            return TDReport(False, "empty decomposition")
        return TDReport(True)
    if not nx.is_tree(tree):
        return TDReport(False, "decomposition graph is not a tree")
    for eid, members in hypergraph.edges.items():
        if not any(members <= bag for bag in td.bags.values()):
            return TDReport(False, f"edge {eid!r} is in no bag", edge=eid)
    for vertex in hypergraph.vertices:
        holders = [node for node, bag in td.bags.items() if vertex in bag]
        if holders and not nx.is_connected(tree.subgraph(holders)):
            return TDReport(False, f"bags holding vertex {vertex} are not connected", vertex=vertex)
    return TDReport(True)


def reduce_td(td: TreeDecomposition) -> TreeDecomposition:
    """Contract every node whose bag is contained in a neighbour's bag."""
    td = td.copy()
    changed = True
    while changed:
        changed = False
        for u, v in sorted(td.tree.edges):
            for small, large in ((u, v), (v, u)):
                if td.bags[small] <= td.bags[large]:
                    for neighbour in list(td.tree.neighbors(small)):
                        if neighbour != large:
                            td.tree.add_edge(neighbour, large)
                    td.tree.remove_node(small)
                    del td.bags[small]
                    changed = True
                    break
            if changed:
                break
    return td


def td_from_ordering(hypergraph: Hypergraph, order: Sequence[int]) -> TreeDecomposition:
    """One bag U_k per vertex, hung under the next-eliminated vertex of U_k, then reduced."""
    order = check_ordering(hypergraph, order)
    position = {v: i for i, v in enumerate(order)}
    sequence = elimination_sequence(hypergraph, order)
    tree = nx.Graph()
    bags: Dict[int, FrozenSet[int]] = {}
    for step in sequence.steps:
        k = step.vertex
        bags[k] = step.union | {k}
        tree.add_node(k)
        rest = step.union - {k}
        if rest:
            tree.add_edge(k, max(rest, key=position.__getitem__))
        elif k != order[0]:
            tree.add_edge(k, order[0])
    return reduce_td(TreeDecomposition(tree, bags))


def _node_key(td: TreeDecomposition, node: int):
    return (sorted(td.bags[node]), node)


def ordering_from_td(hypergraph: Hypergraph, td: TreeDecomposition) -> Ordering:
    """Peel leaves of the reduced, rooted tree; each leaf emits its private vertices."""
    report = validate_td(hypergraph, td)
    if not report:
        raise InvalidDecompositionError(report.message, edge=report.edge, vertex=report.vertex)
    td = reduce_td(td)
    eliminated: List[int] = []
    if td.tree.number_of_nodes():
        root = min(td.tree.nodes, key=lambda n: _node_key(td, n))
        parent = dict(nx.bfs_predecessors(td.tree, root))
        children: Dict[int, int] = {n: 0 for n in td.tree.nodes}
        for node, up in parent.items():
            children[up] += 1
        alive = set(td.tree.nodes)
        while len(alive) > 1:
            leaf = min((n for n in alive if n != root and children[n] == 0), key=lambda n: _node_key(td, n))
            eliminated.extend(sorted(td.bags[leaf] - td.bags[parent[leaf]]))
            children[parent[leaf]] -= 1
            alive.discard(leaf)
        eliminated.extend(sorted(td.bags[root]))
    placed = set(eliminated)
    missing = [v for v in hypergraph.vertices if v not in placed]
    return tuple(missing) + tuple(reversed([v for v in eliminated if v in hypergraph.vertex_set]))


def gyo_join_tree(hypergraph: Hypergraph) -> Optional[TreeDecomposition]:
    """Join tree (bags are hyperedges) of an α-acyclic hypergraph, else None."""
    acyclic, witness = is_alpha_acyclic(hypergraph)
    if not acyclic:
        return None
    return td_from_ordering(hypergraph, witness)


# ------------------------------------------------------------------ induced widths

def _measure(hypergraph: Hypergraph, g: Union[str, Callable], config: Optional[FAQConfig]) -> Callable:
    if callable(g):
        return g
    if g == "tw":
        return lambda bag: len(bag) - 1
    if g == "rho":
        return lambda bag: integral_cover_number(hypergraph, bag)
    if g == "rho*":
        return RhoStar(hypergraph, config)
    raise ValueError(f"Unknown width measure: {g}")


def induced_g_width(hypergraph: Hypergraph, order: Sequence[int], g: Union[str, Callable] = "rho*",
                    config: Optional[FAQConfig] = None) -> Width:
    """max_k g(U_k) over the elimination sequence of `order` (no product vertices)."""
    measure = _measure(hypergraph, g, config)
    try:
        return max((measure(step.union) for step in elimination_sequence(hypergraph, order).steps),
                   default=Fraction(0))
    except InfeasibleCoverError:
        return INFINITE_WIDTH


def ordering_width(hypergraph: Hypergraph, order: Sequence[int], product_vars: Iterable[int] = (),
                   rho: Optional[RhoStar] = None) -> Width:
    """max ρ*_𝓗(U_k) over the semiring/free steps of the product-aware elimination."""
    rho = rho or RhoStar(hypergraph)
    sequence = elimination_sequence(hypergraph, order, product_vars)
    return max((rho(step.union) for step in sequence.steps if step.kind == SEMIRING_STEP),
               default=Fraction(0))


# ------------------------------------------------------------------ fhtw

@dataclass
class FHTWResult:
    width: Width
    td: TreeDecomposition
    ordering: Ordering
    method: str


def _reach(graph: nx.Graph, vertex: int, eliminated: FrozenSet[int]) -> FrozenSet[int]:
    """{v} ∪ vertices outside `eliminated` reachable from v through eliminated ones."""
    seen = {vertex}
    frontier = [vertex]
    found = {vertex}
    while frontier:
        current = frontier.pop()
        for neighbour in graph.neighbors(current):
            if neighbour in seen:
                continue
            seen.add(neighbour)
            if neighbour in eliminated:
                frontier.append(neighbour)
            else:
                found.add(neighbour)
    return frozenset(found)


def fhtw_exact(hypergraph: Hypergraph, config: Optional[FAQConfig] = None,
               rho: Optional[RhoStar] = None) -> FHTWResult:
    """Subset DP: best[S] = min_{v∈S} max(best[S-v], ρ*(U(v | S-v eliminated)))."""
    config = config or DEFAULT_CONFIG
    vertices = hypergraph.vertices
    n = len(vertices)
    if n > config.fhtw_exact_cap:
        raise SizeLimitError("fhtw_exact vertices", n, config.fhtw_exact_cap)
    rho = rho or RhoStar(hypergraph, config)
    graph = hypergraph.gaifman()
    full = (1 << n) - 1
    best: List[Width] = [INFINITE_WIDTH] * (1 << n)
    choice = [-1] * (1 << n)
    best[0] = Fraction(0)
    for mask in sorted(range(1, full + 1), key=lambda m: bin(m).count("1")):
        for bit in range(n):
            if not mask >> bit & 1:
                continue
            rest = mask & ~(1 << bit)
            if best[rest] >= best[mask]:
                continue
            eliminated = frozenset(vertices[i] for i in range(n) if rest >> i & 1)
            cost = max(best[rest], rho(_reach(graph, vertices[bit], eliminated)))
            if cost < best[mask]:
                best[mask] = cost
                choice[mask] = bit
    elimination: List[int] = []
    mask = full
    while mask:
        bit = choice[mask]
        if bit < 0:
            bit = next(i for i in range(n) if mask >> i & 1)
        elimination.append(vertices[bit])
        mask &= ~(1 << bit)
    # elimination lists the last-eliminated vertex first
    order = tuple(elimination)
    logger.debug("fhtw_exact: width %s with ordering %s", best[full], order)
    return FHTWResult(best[full], td_from_ordering(hypergraph, order), order, "exact")


def fhtw_greedy(hypergraph: Hypergraph, config: Optional[FAQConfig] = None,
                rho: Optional[RhoStar] = None) -> FHTWResult:
    """Min-fill elimination with ties broken by ρ* of the neighbourhood, then vertex id."""
    rho = rho or RhoStar(hypergraph, config)
    graph = hypergraph.gaifman()
    eliminated: List[int] = []
    while graph.number_of_nodes():
        def score(v):
            neighbours = list(graph.neighbors(v))
            fill = sum(1 for i, a in enumerate(neighbours) for b in neighbours[i + 1:] if not graph.has_edge(a, b))
            return fill, rho(frozenset(neighbours) | {v}), v
        vertex = min(graph.nodes, key=score)
        neighbours = list(graph.neighbors(vertex))
        for i, a in enumerate(neighbours):
            for b in neighbours[i + 1:]:
                graph.add_edge(a, b)
        graph.remove_node(vertex)
        eliminated.append(vertex)
    order = tuple(reversed(eliminated))
    width = ordering_width(hypergraph, order, rho=rho)
    return FHTWResult(width, td_from_ordering(hypergraph, order), order, "greedy")


def fhtw(hypergraph: Hypergraph, config: Optional[FAQConfig] = None,
         rho: Optional[RhoStar] = None) -> FHTWResult:
    """Exact when the vertex count is within the cap, greedy otherwise."""
    config = config or DEFAULT_CONFIG
    if len(hypergraph.vertex_set) <= config.fhtw_exact_cap:
        return fhtw_exact(hypergraph, config, rho)
    logger.warning("%d vertices exceed the exact fhtw cap %d, using greedy",
                   len(hypergraph.vertex_set), config.fhtw_exact_cap)
    return fhtw_greedy(hypergraph, config, rho)


# ------------------------------------------------------------------ L-star size

def l_star_size(hypergraph: Hypergraph, removed: Iterable[int], config: Optional[FAQConfig] = None) -> int:
    """Max over components C of 𝓗-L of the independence number α_{Ē(C)}(U(C))."""
    config = config or DEFAULT_CONFIG
    removed = frozenset(removed)
    best = 0
    for component in connected_components(hypergraph, removed):
        touching = [members for members in hypergraph.edges.values() if members & component]
        boundary = removed & frozenset().union(*touching) if touching else frozenset()
        if len(boundary) > config.independent_set_cap:
            raise SizeLimitError("L-star boundary", len(boundary), config.independent_set_cap)
        compatible = nx.complete_graph(sorted(boundary))
        for members in touching:
            shared = sorted(members & boundary)
            for i, a in enumerate(shared):
                for b in shared[i + 1:]:
                    if compatible.has_edge(a, b):
                        compatible.remove_edge(a, b)
        if boundary:
            clique, _ = nx.max_weight_clique(compatible, weight=None)
            best = max(best, len(clique))
    return best


# ------------------------------------------------------------------ composition

@dataclass
class CompositionBound:
    bound: Width                 # fhtw(𝓗⁰) · max_e fhtw(𝓗¹_e) + patch
    patch: Width                 # max_t ρ*(χ''(t) ∖ χ'(t)) over the patch-up additions
    td: TreeDecomposition        # valid TD of the composition
    td_width: Width


def composed_width_bound(outer: Hypergraph, family: Dict[EdgeId, Hypergraph], composed: Hypergraph,
                         config: Optional[FAQConfig] = None) -> CompositionBound:
    """
    Each outer bag B becomes an empty connector with a copy of T_e hung below it
    for every edge e meeting B; a patch-up pass then restores running intersection
    along the tree paths between a vertex's occurrences. Every pre-patch bag is an
    inner bag, so td_width never exceeds the returned bound.
    """
    config = config or DEFAULT_CONFIG
    rho = RhoStar(composed, config)
    base = fhtw(outer, config)
    inner = {eid: fhtw(member, config) for eid, member in family.items()}
    piece_width = max((piece.width for piece in inner.values()), default=Fraction(0))

    tree = nx.Graph()
    bags: Dict[int, FrozenSet[int]] = {}
    next_id = 0
    outer_nodes: Dict[int, int] = {}
    for node in base.td.nodes():
        outer_nodes[node] = next_id
        tree.add_node(next_id)
        bags[next_id] = frozenset()
        next_id += 1
    for u, v in base.td.tree.edges:
        tree.add_edge(outer_nodes[u], outer_nodes[v])
    for node in base.td.nodes():
        host = outer_nodes[node]
        for eid, members in outer.edges.items():
            if not members & base.td.bags[node]:
                continue
            piece = inner[eid].td
            root = min(piece.tree.nodes, key=lambda n: _node_key(piece, n))
            copies = {root: next_id}
            tree.add_edge(host, next_id)
            bags[next_id] = piece.bags[root]
            next_id += 1
            for parent, child in nx.bfs_edges(piece.tree, root):
                copies[child] = next_id
                tree.add_edge(copies[parent], next_id)
                bags[next_id] = piece.bags[child]
                next_id += 1
    before = dict(bags)
    for vertex in composed.vertices:
        holders = sorted(n for n, bag in bags.items() if vertex in bag)
        for target in holders[1:]:
            for node in nx.shortest_path(tree, holders[0], target):
                bags[node] = bags[node] | {vertex}
    patch = max((rho(bags[n] - before[n]) for n in bags), default=Fraction(0))
    bound = base.width * piece_width + patch
    td = reduce_td(TreeDecomposition(tree, bags)).relabel()
    report = validate_td(composed, td)
    if not report:
        raise InvalidDecompositionError(f"composed decomposition invalid: {report.message}",
                                        edge=report.edge, vertex=report.vertex)
    return CompositionBound(bound=bound, patch=patch, td=td, td_width=td.width(rho))

"""
Hypergraph - Multi-Hypergraphs and Vertex Orderings
Elimination hypergraph sequences, (extended) components, GYO and nest-point
acyclicity tests, and hypergraph composition
"""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Set, Tuple
import logging

import networkx as nx

from .errors import InvalidOrderingError, UnknownNameError

logger = logging.getLogger("faq.hypergraph")

EdgeId = Hashable
Ordering = Tuple[int, ...]

SEMIRING_STEP = "semiring"
PRODUCT_STEP = "product"


class Hypergraph:
    """
    Multi-hypergraph over dense integer vertices. Duplicate vertex sets are kept
    apart by edge id. `vertex_set` defaults to 0..n-1; restrictions shrink it.
    """

    def __init__(self, vertex_count: int, edges: Iterable[Tuple[EdgeId, Iterable[int]]],
                 vertex_set: Optional[Iterable[int]] = None, allow_empty: bool = False):
        self.vertex_count = vertex_count
        self.vertex_set: FrozenSet[int] = (frozenset(range(vertex_count)) if vertex_set is None
                                           else frozenset(vertex_set))
        self.edges: Dict[EdgeId, FrozenSet[int]] = {}
        for edge_id, members in edges:
            members = frozenset(members)
            if edge_id in self.edges:
                raise UnknownNameError(f"duplicate edge id {edge_id!r}")
            if not members and not allow_empty:
                raise UnknownNameError(f"edge {edge_id!r} is empty")
            stray = members - self.vertex_set
            if stray:
                raise UnknownNameError(f"edge {edge_id!r} uses vertices {sorted(stray)} outside the vertex set")
            self.edges[edge_id] = members

    @classmethod
    def from_sets(cls, vertex_count: int, sets: Sequence[Iterable[int]]) -> "Hypergraph":
        """Edges numbered 0.. in the given order."""
        return cls(vertex_count, list(enumerate(sets)))

    @property
    def vertices(self) -> List[int]:
        return sorted(self.vertex_set)

    def edge_sets(self) -> List[FrozenSet[int]]:
        return list(self.edges.values())

    def incident(self, vertex: int) -> List[EdgeId]:
        return [eid for eid, members in self.edges.items() if vertex in members]

    def restrict(self, keep: Iterable[int]) -> "Hypergraph":
        """Induced sub-hypergraph: edges intersected with `keep`, empty ones dropped."""
        keep = frozenset(keep) & self.vertex_set
        return Hypergraph(self.vertex_count,
                          [(eid, members & keep) for eid, members in self.edges.items() if members & keep],
                          vertex_set=keep)

    def remove(self, drop: Iterable[int]) -> "Hypergraph":
        return self.restrict(self.vertex_set - frozenset(drop))

    def gaifman(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        for members in self.edges.values():
            ordered = sorted(members)
            for i, u in enumerate(ordered):
                for v in ordered[i + 1:]:
                    graph.add_edge(u, v)
        return graph

    def is_covered(self) -> bool:
        covered: Set[int] = set()
        for members in self.edges.values():
            covered |= members
        return covered >= self.vertex_set

    def __eq__(self, other) -> bool:
        return (isinstance(other, Hypergraph) and self.vertex_set == other.vertex_set
                and self.edges == other.edges)

    def __repr__(self) -> str:
        body = ", ".join(f"{eid}:{sorted(m)}" for eid, m in self.edges.items())
        return f"Hypergraph(V={self.vertices}, E=[{body}])"


def check_ordering(hypergraph: Hypergraph, order: Sequence[int]) -> Ordering:
    order = tuple(order)
    if len(order) != len(hypergraph.vertex_set) or frozenset(order) != hypergraph.vertex_set:
        raise InvalidOrderingError(f"{list(order)} is not a permutation of {hypergraph.vertices}")
    return order


# ------------------------------------------------------------------ elimination

@dataclass
class EliminationStep:
    vertex: int
    kind: str
    edges: Dict[EdgeId, FrozenSet[int]]       # 𝓔_k, before eliminating `vertex`
    incident: List[EdgeId]                     # ∂(k)
    union: FrozenSet[int]                      # U_k
    new_edge: Optional[EdgeId] = None


@dataclass
class EliminationSequence:
    order: Ordering
    steps: List[EliminationStep] = field(default_factory=list)   # last vertex of `order` first
    final_edges: Dict[EdgeId, FrozenSet[int]] = field(default_factory=dict)

    def union_of(self, vertex: int) -> FrozenSet[int]:
        for step in self.steps:
            if step.vertex == vertex:
                return step.union
        raise KeyError(vertex)

    def unions(self) -> Dict[int, FrozenSet[int]]:
        return {step.vertex: step.union for step in self.steps}


def elimination_sequence(hypergraph: Hypergraph, order: Sequence[int],
                         product_vars: Iterable[int] = ()) -> EliminationSequence:
    """
    Eliminate order[-1] first. Semiring/free vertices replace ∂(k) with U_k - {k};
    product vertices only drop k from the edges of ∂(k).
    """
    order = check_ordering(hypergraph, order)
    product_vars = frozenset(product_vars)
    if not product_vars <= hypergraph.vertex_set:
        raise InvalidOrderingError(f"product vertices {sorted(product_vars - hypergraph.vertex_set)} unknown")

    edges = dict(hypergraph.edges)
    sequence = EliminationSequence(order=order)
    for vertex in reversed(order):
        incident = [eid for eid, members in edges.items() if vertex in members]
        union: FrozenSet[int] = frozenset().union(*(edges[eid] for eid in incident))
        kind = PRODUCT_STEP if vertex in product_vars else SEMIRING_STEP
        step = EliminationStep(vertex=vertex, kind=kind, edges=dict(edges), incident=incident, union=union)
        if kind == PRODUCT_STEP:
            for eid in incident:
                edges[eid] = edges[eid] - {vertex}
        else:
            for eid in incident:
                del edges[eid]
            step.new_edge = ("U", vertex)
            edges[step.new_edge] = union - {vertex}
        sequence.steps.append(step)
    sequence.final_edges = edges
    return sequence


# ------------------------------------------------------------------ components

@dataclass
class ExtendedComponent:
    core: FrozenSet[int]                                  # 𝓥(C)
    vertices: FrozenSet[int]                              # 𝓥'(C)
    edges: List[Tuple[EdgeId, FrozenSet[int]]]            # 𝓔'(C)

    def hypergraph(self, vertex_count: int) -> Hypergraph:
        return Hypergraph(vertex_count, self.edges, vertex_set=self.vertices)


def connected_components(hypergraph: Hypergraph, remove: Iterable[int] = ()) -> List[FrozenSet[int]]:
    """Gaifman components of 𝓗 - remove, ordered by minimum vertex."""
    reduced = hypergraph.remove(remove)
    components = [frozenset(c) for c in nx.connected_components(reduced.gaifman())]
    return sorted(components, key=min)


def extended_components(hypergraph: Hypergraph, removed: Iterable[int],
                        product_vertices: Iterable[int]) -> Tuple[List[ExtendedComponent], FrozenSet[int]]:
    """
    Components of 𝓗 - L - W, each widened by the product vertices W sharing an edge
    with it, plus the dangling product set D = ∪{S ∩ W : S - L ⊆ W}.
    """
    removed = frozenset(removed)
    product_vertices = frozenset(product_vertices) & hypergraph.vertex_set
    if removed & product_vertices:
        raise InvalidOrderingError("L and W must be disjoint")
    components: List[ExtendedComponent] = []
    for core in connected_components(hypergraph, removed | product_vertices):
        touching = [(eid, members) for eid, members in hypergraph.edges.items() if members & core]
        widened = core | frozenset().union(*(members & product_vertices for _, members in touching))
        components.append(ExtendedComponent(core=core, vertices=widened,
                                            edges=[(eid, members & widened) for eid, members in touching]))
    dangling: Set[int] = set()
    for members in hypergraph.edges.values():
        if members - removed <= product_vertices:
            dangling |= members & product_vertices
    return components, frozenset(dangling)


# ------------------------------------------------------------------ acyclicity

def is_alpha_acyclic(hypergraph: Hypergraph) -> Tuple[bool, Optional[Ordering]]:
    """
    GYO-style greedy elimination: eliminate a vertex whose U is itself one of its
    incident edges. Ties: smallest vertex. Witness is the reverse elimination order.
    """
    edges = {eid: members for eid, members in hypergraph.edges.items() if members}
    remaining = set(hypergraph.vertex_set)
    eliminated: List[int] = []
    while remaining:
        chosen = None
        for vertex in sorted(remaining):
            incident = [eid for eid, members in edges.items() if vertex in members]
            union = frozenset().union(*(edges[eid] for eid in incident))
            if not incident or any(edges[eid] == union for eid in incident):
                chosen = (vertex, incident, union)
                break
        if chosen is None:
            logger.debug("no GYO-eliminable vertex among %s", sorted(remaining))
            return False, None
        vertex, incident, union = chosen
        for eid in incident:
            del edges[eid]
        if union - {vertex}:
            edges[("U", vertex)] = union - {vertex}
        remaining.discard(vertex)
        eliminated.append(vertex)
    return True, tuple(reversed(eliminated))


def is_nest_point(edge_sets: Iterable[FrozenSet[int]], vertex: int) -> bool:
    chain = sorted((s for s in edge_sets if vertex in s), key=len)
    return all(a <= b for a, b in zip(chain, chain[1:]))


def is_beta_acyclic(hypergraph: Hypergraph) -> Tuple[bool, Optional[Ordering]]:
    """Repeated nest-point removal (smallest vertex first); NEO is the reverse removal order."""
    edge_sets = [members for members in hypergraph.edges.values() if members]
    remaining = set(hypergraph.vertex_set)
    removed: List[int] = []
    while remaining:
        nest = next((v for v in sorted(remaining) if is_nest_point(edge_sets, v)), None)
        if nest is None:
            return False, None
        edge_sets = [s - {nest} for s in edge_sets if s - {nest}]
        remaining.discard(nest)
        removed.append(nest)
    return True, tuple(reversed(removed))


def is_chain(sets: Sequence[FrozenSet[int]]) -> bool:
    ordered = sorted(sets, key=len)
    return all(a <= b for a, b in zip(ordered, ordered[1:]))


# ------------------------------------------------------------------ composition

def compose(outer: Hypergraph, family: Dict[EdgeId, Hypergraph]) -> Hypergraph:
    """𝓗⁰∘𝓗¹: union of the family's edge sets, deduplicated by vertex set."""
    if set(family) != set(outer.edges):
        raise UnknownNameError("family keys must be exactly the outer edge ids")
    seen: Set[FrozenSet[int]] = set()
    edges: List[Tuple[EdgeId, FrozenSet[int]]] = []
    for eid, members in outer.edges.items():
        inner = family[eid]
        if inner.vertex_set != members:
            raise UnknownNameError(f"family member for {eid!r} spans {inner.vertices}, expected {sorted(members)}")
        for inner_id, inner_members in inner.edges.items():
            if inner_members in seen:
                continue
            seen.add(inner_members)
            edges.append(((eid, inner_id), inner_members))
    return Hypergraph(outer.vertex_count, edges, vertex_set=outer.vertex_set)

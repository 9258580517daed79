"""
EVO - Equivalent Variable Orderings
Expression trees, the precedence poset and its linear extensions,
component-wise equivalence, EVO membership, exact FAQ-width and the
node-hypergraph approximation
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple
import logging

import networkx as nx

from .config import DEFAULT_CONFIG, FAQConfig
from .errors import InvalidOrderingError, InvariantViolationError
from .hypergraph import Hypergraph, Ordering, extended_components
from .query import FREE, GENERAL, IDEMPOTENT, Query
from .semiring import PRODUCT
from .width import FHTWResult, RhoStar, Width, fhtw_exact, fhtw_greedy, ordering_width

logger = logging.getLogger("faq.evo")

DUMMY = -1          # X₀, the isolated free vertex that anchors the root


# ------------------------------------------------------------------ expression tree

@dataclass
class TreeNode:
    id: int
    variables: Set[int]
    tag: str
    parent: Optional[int] = None
    children: List[int] = field(default_factory=list)


class ExpressionTree:
    """Tagged nodes of variable sets; product variables may be copied into several nodes."""

    def __init__(self, regime: str):
        self.regime = regime
        self.nodes: Dict[int, TreeNode] = {}
        self.root: Optional[int] = None

    def add(self, variables: Set[int], tag: str, parent: Optional[int]) -> int:
        node = TreeNode(len(self.nodes), set(variables), tag, parent)
        self.nodes[node.id] = node
        if parent is None:
            self.root = node.id
        else:
            self.nodes[parent].children.append(node.id)
        return node.id

    def ancestors(self, node_id: int) -> List[int]:
        chain = []
        parent = self.nodes[node_id].parent
        while parent is not None:
            chain.append(parent)
            parent = self.nodes[parent].parent
        return chain

    def subtree(self, node_id: int) -> List[int]:
        found = [node_id]
        for child in self.nodes[node_id].children:
            found.extend(self.subtree(child))
        return found

    def preorder(self) -> List[int]:
        return self.subtree(self.root) if self.root is not None else []

    def compress(self) -> None:
        """Merge children into parents carrying the same tag until none remain."""
        changed = True
        while changed:
            changed = False
            for node_id in self.preorder():
                node = self.nodes[node_id]
                for child_id in list(node.children):
                    child = self.nodes[child_id]
                    if child.tag != node.tag:
                        continue
                    node.variables |= child.variables
                    position = node.children.index(child_id)
                    node.children[position:position + 1] = child.children
                    for grandchild in child.children:
                        self.nodes[grandchild].parent = node_id
                    del self.nodes[child_id]
                    changed = True
                    break
                if changed:
                    break

    def drop_dummy(self) -> None:
        for node in self.nodes.values():
            node.variables.discard(DUMMY)

    def top(self) -> TreeNode:
        """The root, or its single child when the root is an empty free node."""
        node = self.nodes[self.root]
        while not node.variables and len(node.children) == 1:
            node = self.nodes[node.children[0]]
        return node

    def render(self, names: Sequence[str]) -> str:
        lines: List[str] = []

        def walk(node_id: int, depth: int) -> None:
            node = self.nodes[node_id]
            label = ",".join(names[v] for v in sorted(node.variables)) or "∅"
            lines.append(f"{'  ' * depth}[{node.tag}] {{{label}}}")
            for child in node.children:
                walk(child, depth + 1)

        if self.root is not None:
            walk(self.root, 0)
        return "\n".join(lines)


def _first_block(sequence: Sequence[int], tag_of: Callable[[int], str]) -> List[int]:
    block = [sequence[0]]
    for v in sequence[1:]:
        if tag_of(v) != tag_of(sequence[0]):
            break
        block.append(v)
    return block


def _compartmentalize(tree: ExpressionTree, sequence: Sequence[int], hypergraph: Hypergraph,
                      tag_of: Callable[[int], str], parent: Optional[int]) -> None:
    block = _first_block(sequence, tag_of)
    node = tree.add(set(block), tag_of(block[0]), parent)
    rest = [v for v in sequence if v not in block]
    if not rest:
        return
    product_rest = {v for v in rest if tag_of(v) == PRODUCT}
    components, dangling = extended_components(hypergraph, block, product_rest)
    for component in components:
        sub_sequence = [v for v in sequence if v in component.vertices]
        _compartmentalize(tree, sub_sequence, component.hypergraph(hypergraph.vertex_count),
                          tag_of, node)
    if dangling:
        tree.add(set(dangling), PRODUCT, node)


def _working_hypergraph(query: Query, regime: str) -> Hypergraph:
    """𝓗, or 𝓗 with every edge extended by the product variables K̄ in the general regime."""
    if regime != GENERAL:
        return query.hypergraph
    extra = query.product_vars
    return Hypergraph(query.n, [(eid, members | extra) for eid, members in query.hypergraph.edges.items()])


def _subtree_for(sequence: Sequence[int], hypergraph: Hypergraph, tag_of: Callable[[int], str],
                 regime: str) -> ExpressionTree:
    tree = ExpressionTree(regime)
    _compartmentalize(tree, sequence, hypergraph, tag_of, None)
    tree.compress()
    tree.drop_dummy()
    return tree


def expression_tree(query: Query) -> ExpressionTree:
    regime = query.regime()
    working = _working_hypergraph(query, regime)
    anchored = Hypergraph(query.n, working.edges.items(), vertex_set=working.vertex_set | {DUMMY})
    tag_of = lambda v: FREE if v == DUMMY else query.tag(v)
    tree = _subtree_for([DUMMY] + list(query.written_order), anchored, tag_of, regime)
    logger.info("expression tree (%s regime) with %d nodes", regime, len(tree.nodes))
    return tree


# ------------------------------------------------------------------ precedence poset

class PrecedencePoset:
    """Strict order over the query variables, transitively closed."""

    def __init__(self, elements: Sequence[int], pairs: Sequence[Tuple[int, int]]):
        self.elements = sorted(elements)
        graph = nx.DiGraph()
        graph.add_nodes_from(self.elements)
        graph.add_edges_from((u, v) for u, v in pairs if u != v)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise InvariantViolationError(f"precedence relation is not antisymmetric: {cycle}")
        self.closure = nx.transitive_closure_dag(graph)

    def less(self, u: int, v: int) -> bool:
        return self.closure.has_edge(u, v)

    def pairs(self) -> List[Tuple[int, int]]:
        return sorted(self.closure.edges)

    def hasse_edges(self) -> List[Tuple[int, int]]:
        return sorted(nx.transitive_reduction(self.closure).edges)

    def predecessors(self, v: int) -> Set[int]:
        return set(self.closure.predecessors(v))


def precedence_poset(query: Query, tree: Optional[ExpressionTree] = None) -> PrecedencePoset:
    """
    u ≺ v iff a node holding u is a strict ancestor of a node holding v; free
    variables precede bound ones, and in the idempotent regime every semiring
    variable whose aggregate is not closed on 𝔻_I precedes every product variable.
    """
    tree = tree or expression_tree(query)
    pairs: Set[Tuple[int, int]] = set()
    for node_id, node in tree.nodes.items():
        for ancestor in tree.ancestors(node_id):
            for u in tree.nodes[ancestor].variables:
                for v in node.variables:
                    pairs.add((u, v))
    for u in query.free_vars:
        for v in range(query.f, query.n):
            pairs.add((u, v))
    if tree.regime == IDEMPOTENT:
        for u in query.unclosed_semiring_vars():
            for v in query.product_vars:
                pairs.add((u, v))
    both = {(u, v) for u, v in pairs if (v, u) in pairs and u != v}
    if both:
        raise InvariantViolationError(f"variables precede each other: {sorted(both)[0]}")
    return PrecedencePoset(range(query.n), sorted(pairs))


@dataclass
class LinExResult:
    orderings: List[Ordering]
    truncated: bool


def iter_linear_extensions(poset: PrecedencePoset) -> Iterator[Ordering]:
    """Lexicographic depth-first enumeration."""
    remaining_preds = {v: set(poset.predecessors(v)) for v in poset.elements}
    chosen: List[int] = []
    placed: Set[int] = set()

    def extend() -> Iterator[Ordering]:
        if len(chosen) == len(poset.elements):
            yield tuple(chosen)
            return
        for v in poset.elements:
            if v in placed or not remaining_preds[v] <= placed:
                continue
            chosen.append(v)
            placed.add(v)
            yield from extend()
            placed.discard(v)
            chosen.pop()

    yield from extend()


def linear_extensions(poset: PrecedencePoset, limit: Optional[int] = None,
                      config: Optional[FAQConfig] = None) -> LinExResult:
    limit = limit or (config or DEFAULT_CONFIG).linex_limit
    if limit < 1:
        raise ValueError("limit must be at least 1")
    found: List[Ordering] = []
    for ordering in iter_linear_extensions(poset):
        if len(found) == limit:
            logger.info("LinEx enumeration truncated at %d", limit)
            return LinExResult(found, True)
        found.append(ordering)
    return LinExResult(found, False)


# ------------------------------------------------------------------ CW-equivalence / EVO

class _Context:
    """Regime-dependent pieces shared by the recursive checks."""

    def __init__(self, query: Query):
        self.query = query
        self.regime = query.regime()
        self.hypergraph = _working_hypergraph(query, self.regime)
        self.tag_of = query.tag

    def product_in(self, vertices) -> Set[int]:
        return {v for v in vertices if self.query.is_product(v)}


def _restrict(order: Sequence[int], vertices) -> List[int]:
    return [v for v in order if v in vertices]


def _cw_equivalent(ctx: _Context, hypergraph: Hypergraph, sigma: List[int], pi: List[int]) -> bool:
    if len(sigma) <= 1:
        return sigma == pi
    products = ctx.product_in(sigma)
    components, _ = extended_components(hypergraph, (), products)
    if len(components) >= 2:
        return all(_cw_equivalent(ctx, c.hypergraph(hypergraph.vertex_count),
                                  _restrict(sigma, c.vertices), _restrict(pi, c.vertices))
                   for c in components)
    first = sigma[0]
    if not ctx.query.is_product(first):
        candidates = [[first]] if pi[0] == first else []
    else:
        candidates = []
        for p in range(1, len(sigma) + 1):
            if not ctx.query.is_product(sigma[p - 1]):
                break
            if set(sigma[:p]) == set(pi[:p]):
                candidates.append(sigma[:p])
    for block in candidates:
        if _components_agree(ctx, hypergraph, block, sigma, pi):
            return True
    return False


def _components_agree(ctx: _Context, hypergraph: Hypergraph, block: List[int],
                      sigma: List[int], pi: List[int]) -> bool:
    rest = hypergraph.vertex_set - set(block)
    components, _ = extended_components(hypergraph, block, ctx.product_in(rest))
    return all(_cw_equivalent(ctx, c.hypergraph(hypergraph.vertex_count),
                              _restrict(sigma, c.vertices), _restrict(pi, c.vertices))
               for c in components)


def _free_prefix_ok(query: Query, order: Sequence[int]) -> bool:
    return set(order[:query.f]) == set(query.free_vars)


def _check_permutation(query: Query, order: Sequence[int]) -> List[int]:
    order = list(order)
    if sorted(order) != list(range(query.n)):
        raise InvalidOrderingError(f"{order} is not a permutation of the {query.n} query variables")
    return order


def is_cw_equivalent(query: Query, sigma: Sequence[int], pi: Sequence[int]) -> bool:
    sigma = _check_permutation(query, sigma)
    pi = _check_permutation(query, pi)
    if not (_free_prefix_ok(query, sigma) and _free_prefix_ok(query, pi)):
        return False
    ctx = _Context(query)
    components, _ = extended_components(ctx.hypergraph, query.free_vars, query.product_vars)
    return all(_cw_equivalent(ctx, c.hypergraph(query.n), _restrict(sigma, c.vertices), _restrict(pi, c.vertices))
               for c in components)


def _in_cwe_linex(ctx: _Context, hypergraph: Hypergraph, written: List[int], order: List[int]) -> bool:
    """Whether `order` is CW-equivalent to a linear extension of the sub-query's tree."""
    if len(order) <= 1:
        return True
    products = ctx.product_in(order)
    components, _ = extended_components(hypergraph, (), products)
    if len(components) >= 2:
        return all(_in_cwe_linex(ctx, c.hypergraph(hypergraph.vertex_count),
                                 _restrict(written, c.vertices), _restrict(order, c.vertices))
                   for c in components)
    top = _subtree_for(written, hypergraph, ctx.tag_of, ctx.regime).top()
    if top.tag == PRODUCT:
        # any product prefix drawn from the top node; the rest of it dangles
        candidates = []
        for p in range(1, len(order) + 1):
            if order[p - 1] not in top.variables:
                break
            candidates.append(order[:p])
    elif order[0] in top.variables:
        candidates = [[order[0]]]
    else:
        candidates = []
    return any(_blocks_agree(ctx, hypergraph, block, written, order) for block in candidates)


def _anchored_in_cwe_linex(ctx: _Context, written: List[int], order: List[int]) -> bool:
    """
    Split at the free root block first, as the expression tree does. Product
    variables reached only through product-only edges dangle and may go anywhere.
    """
    hypergraph = ctx.hypergraph
    components, _ = extended_components(hypergraph, ctx.query.free_vars, ctx.product_in(order))
    return all(_in_cwe_linex(ctx, c.hypergraph(hypergraph.vertex_count),
                             _restrict(written, c.vertices), _restrict(order, c.vertices))
               for c in components)


def _blocks_agree(ctx: _Context, hypergraph: Hypergraph, block: List[int],
                  written: List[int], order: List[int]) -> bool:
    rest = hypergraph.vertex_set - set(block)
    sub_components, _ = extended_components(hypergraph, block, ctx.product_in(rest))
    return all(_in_cwe_linex(ctx, c.hypergraph(hypergraph.vertex_count),
                             _restrict(written, c.vertices), _restrict(order, c.vertices))
               for c in sub_components)


def evo_contains(query: Query, order: Sequence[int]) -> bool:
    """EVO membership without enumerating LinEx."""
    order = _check_permutation(query, order)
    if not _free_prefix_ok(query, order):
        return False
    ctx = _Context(query)
    if ctx.regime == IDEMPOTENT:
        position = {v: i for i, v in enumerate(order)}
        first_product = min(position[v] for v in query.product_vars)
        if any(position[v] > first_product for v in query.unclosed_semiring_vars()):
            return False
    return _anchored_in_cwe_linex(ctx, list(query.written_order), order)


# ------------------------------------------------------------------ FAQ-width

def faqw_of_ordering(query: Query, order: Sequence[int], rho: Optional[RhoStar] = None) -> Width:
    """max over free/semiring steps of ρ*_𝓗(U_k)."""
    return ordering_width(query.hypergraph, order, query.product_vars,
                          rho or RhoStar(query.hypergraph))


@dataclass
class WidthChoice:
    width: Width
    ordering: Ordering
    truncated: bool = False
    method: str = "exact"


def faqw_exact_query(query: Query, limit: Optional[int] = None,
                     config: Optional[FAQConfig] = None) -> WidthChoice:
    """Minimum faqw over LinEx(P); ties keep the lexicographically first ordering."""
    config = config or DEFAULT_CONFIG
    poset = precedence_poset(query)
    extensions = linear_extensions(poset, limit or config.linex_limit)
    rho = RhoStar(query.hypergraph, config)
    best: Optional[WidthChoice] = None
    for ordering in extensions.orderings:
        width = faqw_of_ordering(query, ordering, rho)
        if best is None or width < best.width:
            best = WidthChoice(width, ordering, extensions.truncated)
    logger.info("faqw %s via %s over %d linear extensions", best.width, list(best.ordering),
                len(extensions.orderings))
    return best


@dataclass
class NodeHypergraph:
    hypergraph: Hypergraph
    child_edges: Dict[int, FrozenSet[int]]       # S_{L,C} per child
    boundary: FrozenSet[int]                     # U(L)


def _touching(query: Query, vertices) -> List[FrozenSet[int]]:
    return [members for members in query.hypergraph.edges.values() if members & vertices]


def _semiring_vars(tree: ExpressionTree, node_ids: Sequence[int]) -> FrozenSet[int]:
    return frozenset().union(*(tree.nodes[d].variables for d in node_ids if tree.nodes[d].tag != PRODUCT))


def node_hypergraph(query: Query, tree: ExpressionTree, node_id: int) -> NodeHypergraph:
    """
    𝓗_L: projections of edges meeting L but no semiring descendant, plus one
    S_{L,C} per child C whose subtree holds a semiring node.
    """
    node = tree.nodes[node_id]
    L = frozenset(node.variables)
    subtree = tree.subtree(node_id)
    below = _semiring_vars(tree, subtree[1:]) - L
    reach = frozenset().union(*_touching(query, _semiring_vars(tree, subtree)))
    boundary = frozenset()
    for ancestor in tree.ancestors(node_id):
        boundary |= tree.nodes[ancestor].variables & reach

    edges = []
    for eid, members in query.hypergraph.edges.items():
        if members & L and not members & below:
            edges.append((eid, members & L))
    child_edges: Dict[int, FrozenSet[int]] = {}
    for child in node.children:
        touching = frozenset().union(*_touching(query, _semiring_vars(tree, tree.subtree(child))))
        trace = L & touching
        child_edges[child] = trace
        if trace:
            edges.append((("child", child), trace))
    return NodeHypergraph(Hypergraph(query.n, edges, vertex_set=L), child_edges, boundary)


ORACLES: Dict[str, Callable[..., FHTWResult]] = {"exact": fhtw_exact, "greedy": fhtw_greedy}


def faqw_approx(query: Query, oracle: str = "exact", config: Optional[FAQConfig] = None) -> WidthChoice:
    """
    Order each free/semiring node by a decomposition of its node hypergraph, then
    linearize the precedence poset using the concatenated node orders as priority.
    """
    config = config or DEFAULT_CONFIG
    if oracle not in ORACLES:
        raise ValueError(f"Unknown fhtw oracle: {oracle}")
    tree = expression_tree(query)
    poset = precedence_poset(query, tree)
    priority: List[int] = []
    for node_id in _breadth_first(tree):
        node = tree.nodes[node_id]
        if not node.variables:
            continue
        if node.tag == PRODUCT:
            priority.extend(sorted(node.variables))
            continue
        local = node_hypergraph(query, tree, node_id).hypergraph
        priority.extend(ORACLES[oracle](local, config).ordering)
    rank: Dict[int, int] = {}
    for index, v in enumerate(priority):
        rank.setdefault(v, index)

    placed: Set[int] = set()
    ordering: List[int] = []
    while len(ordering) < query.n:
        ready = [v for v in range(query.n) if v not in placed and poset.predecessors(v) <= placed]
        chosen = min(ready, key=lambda v: (rank.get(v, len(priority)), v))
        ordering.append(chosen)
        placed.add(chosen)
    order = tuple(ordering)
    width = faqw_of_ordering(query, order, RhoStar(query.hypergraph, config))
    logger.info("approximate faqw %s via %s (%s oracle)", width, list(order), oracle)
    return WidthChoice(width, order, False, f"approx-{oracle}")


def _breadth_first(tree: ExpressionTree) -> List[int]:
    if tree.root is None:
        return []
    queue = [tree.root]
    seen: List[int] = []
    while queue:
        node_id = queue.pop(0)
        seen.append(node_id)
        queue.extend(tree.nodes[node_id].children)
    return seen


def choose_ordering(query: Query, config: Optional[FAQConfig] = None) -> WidthChoice:
    """Exact faqw when LinEx is small, the exact-oracle approximation otherwise."""
    config = config or DEFAULT_CONFIG
    poset = precedence_poset(query)
    sample = linear_extensions(poset, config.exact_linex_threshold)
    if not sample.truncated:
        return faqw_exact_query(query, config.exact_linex_threshold, config)
    oracle = "exact" if query.n <= config.fhtw_exact_cap else "greedy"
    return faqw_approx(query, oracle, config)

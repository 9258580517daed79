"""
FAQEngine - Evaluation & Plans
Brute-force oracle, OutsideIn backtracking join, InsideOut variable elimination
with indicator projections, product marginalization and the 01-OR output phase
"""
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union
import logging

from .config import DEFAULT_CONFIG, FAQConfig
from .errors import InvariantViolationError, OrderingRejectedError, SizeLimitError
from .evo import choose_ordering, evo_contains, faqw_approx, faqw_of_ordering
from .factor import PLUS_INF, ListingFactor, SeekCounter
from .hypergraph import EdgeId, check_ordering
from .query import FREE, Query
from .semiring import PRODUCT, SemiringSpec
from .width import RhoStar, agm_bound

logger = logging.getLogger("faq.engine")

# OUTPUT PHASES
FACTORIZED = "factorized"
DIRECT = "direct"

# MODES
LISTING = "listing"
ENUMERATE = "enumerate"
COUNT = "count"


@dataclass
class EvalStats:
    seeks: int = 0
    tuples: int = 0
    adds: int = 0
    mults: int = 0
    powered_factors: int = 0
    power_mults: int = 0
    reorders: int = 0

    def as_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)


@dataclass
class StepRecord:
    vertex: int
    kind: str                        # semiring | product | free
    union: FrozenSet[int]
    incident: List[EdgeId]
    output_size: int
    tuples: int = 0


# ------------------------------------------------------------------ brute force

def brute_force_eval(query: Query, config: Optional[FAQConfig] = None) -> ListingFactor:
    """Literal right-to-left fold of the written expression."""
    config = config or DEFAULT_CONFIG
    space = 1
    for v in range(query.n):
        space *= query.domain_size(v)
    if space > config.brute_force_limit:
        raise SizeLimitError("brute-force assignment space", space, config.brute_force_limit)
    base = query.base
    assignment: Dict[int, int] = {}

    def fold(level: int) -> Any:
        if level == query.n:
            return base.product(factor.value_of(assignment) for factor in query.factors)
        tag = query.tag(level)
        values = []
        for x in range(query.domain_size(level)):
            assignment[level] = x
            values.append(fold(level + 1))
        del assignment[level]
        if tag == PRODUCT:
            return base.product(values)
        return query.spec_for(level).sum(values)

    entries = {}
    for key in cartesian(*(range(query.domain_size(v)) for v in query.free_vars)):
        assignment.update(enumerate(key))
        value = fold(query.f)
        if not base.is_zero(value):
            entries[tuple(key)] = value
    return ListingFactor(query.free_vars, base, entries, "phi")


# ------------------------------------------------------------------ OutsideIn

class _LeapfrogJoin:
    """
    Backtracking search over `order`, intersecting successor streams of every
    factor whose support holds the current variable.
    """

    def __init__(self, factors: Sequence[ListingFactor], order: Sequence[int],
                 spec: SemiringSpec, stats: EvalStats):
        self.order = tuple(order)
        self.spec = spec
        self.stats = stats
        position = {v: i for i, v in enumerate(self.order)}
        self.factors: List[ListingFactor] = []
        for factor in factors:
            missing = set(factor.order) - set(position)
            if missing:
                raise InvariantViolationError(f"factor {factor.name} uses variables {sorted(missing)} outside the join")
            keyed = factor.reorder(sorted(factor.order, key=position.__getitem__))
            if keyed is not factor:
                stats.reorders += 1
            self.factors.append(keyed)
        # per level: (factor, positions of its earlier variables in `order`)
        self.levels: List[List[Tuple[ListingFactor, List[int]]]] = [[] for _ in self.order]
        for factor in self.factors:
            for depth, v in enumerate(factor.order):
                earlier = [position[u] for u in factor.order[:depth]]
                self.levels[position[v]].append((factor, earlier))
        for depth, participants in enumerate(self.levels):
            if not participants:
                raise InvariantViolationError(f"variable {self.order[depth]} is covered by no factor")
        self.assignment: List[int] = [0] * len(self.order)
        self.counter = SeekCounter()

    @property
    def seeks(self) -> int:
        return self.counter.count

    def _value(self) -> Any:
        value = self.spec.one
        for factor in self.factors:
            key = tuple(self.assignment[self.order.index(v)] for v in factor.order)
            value = self.spec.mul(value, factor.value_at(key, self.counter))
            self.stats.mults += 1
        return value

    def bindings(self, depth: int = 0) -> Iterator[Tuple[Tuple[int, ...], Any]]:
        if depth == len(self.order):
            self.stats.tuples += 1
            yield tuple(self.assignment), self._value()
            return
        participants = self.levels[depth]
        x: Union[int, float] = 0
        while True:
            seen = []
            for factor, earlier in participants:
                prefix = [self.assignment[p] for p in earlier]
                seen.append(factor.successor(prefix, x - 1, self.counter))
            target = max(seen)
            if target == PLUS_INF:
                return
            if all(y == target for y in seen):
                self.assignment[depth] = int(target)
                yield from self.bindings(depth + 1)
                x = int(target) + 1
            else:
                x = target


def outside_in(factors: Sequence[ListingFactor], order: Sequence[int], free_count: int,
               spec: SemiringSpec, stats: Optional[EvalStats] = None) -> ListingFactor:
    """⊕-aggregate the ⊗-product of `factors` over order[free_count:], keyed by order[:free_count]."""
    stats = stats if stats is not None else EvalStats()
    join = _LeapfrogJoin(factors, order, spec, stats)
    out: Dict[Tuple[int, ...], Any] = {}
    for key, value in join.bindings():
        head = key[:free_count]
        if head in out:
            out[head] = spec.add(out[head], value)
            stats.adds += 1
        else:
            out[head] = value
    stats.seeks += join.seeks
    entries = {k: v for k, v in out.items() if not spec.is_zero(v)}
    return ListingFactor(tuple(order[:free_count]), spec, entries)


# ------------------------------------------------------------------ InsideOut

@dataclass
class EvalResult:
    output: ListingFactor
    ordering: Tuple[int, ...]
    faqw: Any
    steps: List[StepRecord]
    stats: EvalStats
    method: str = "given"
    truncated: bool = False
    agm: Dict[int, float] = field(default_factory=dict)

    def rows(self, query: Query) -> List[Tuple[Tuple[Any, ...], str]]:
        """Output rows as (domain labels in free-variable order, formatted value)."""
        output = self.output.reorder(query.free_vars)
        return [(tuple(query.domains[v][x] for v, x in zip(output.order, key)), query.carrier.format(value))
                for key, value in output]

    def plan(self, query: Query) -> Dict[str, Any]:
        return {
            "ordering": [query.names[v] for v in self.ordering],
            "faqw": str(self.faqw),
            "method": self.method,
            "truncated": self.truncated,
            "steps": [{"variable": query.names[s.vertex], "kind": s.kind,
                       "U": sorted(query.names[v] for v in s.union),
                       "output_size": s.output_size, "tuples": s.tuples,
                       **({"agm": self.agm[s.vertex]} if s.vertex in self.agm else {})}
                      for s in self.steps],
            "stats": self.stats.as_dict(),
        }


class FAQEngine:
    """InsideOut over one query; each call to `inside_out` starts from the input factors."""

    def __init__(self, query: Query, config: Optional[FAQConfig] = None, use_projections: bool = True):
        self.query = query
        self.config = config or DEFAULT_CONFIG
        self.use_projections = use_projections
        self.stats = EvalStats()
        self.steps: List[StepRecord] = []
        self.edges: Dict[EdgeId, ListingFactor] = {}
        self.scalar: Any = query.base.one
        self.retained: List[ListingFactor] = []
        self.residual: List[ListingFactor] = []
        self.residual_scalar: Any = query.base.one

    # ------------------------------------------------------------------ state

    def _reset(self) -> None:
        self.stats = EvalStats()
        self.steps = []
        self.edges = {factor.name: factor for factor in self.query.factors}
        self.scalar = self.query.base.one
        self.retained = []
        self.residual = []
        self.residual_scalar = self.query.base.one

    def _absorb(self, edge_id: EdgeId, factor: ListingFactor) -> None:
        """Install a factor; empty supports fold into the scalar multiplier."""
        if factor.order:
            self.edges[edge_id] = factor
            return
        base = self.query.base
        value = factor.value_at(()) if factor.size else base.zero
        self.scalar = base.mul(self.scalar, value)
        self.stats.mults += 1

    def _incident(self, vertex: int) -> List[EdgeId]:
        return [eid for eid, factor in self.edges.items() if vertex in factor.support]

    def _projections(self, union: FrozenSet[int], skip: Sequence[EdgeId]) -> List[ListingFactor]:
        if not self.use_projections:
            return []
        return [factor.indicator_projection(union) for eid, factor in self.edges.items()
                if eid not in skip and factor.support & union]

    # ------------------------------------------------------------------ elimination steps

    def eliminate_semiring_var(self, vertex: int, position: Dict[int, int]) -> None:
        incident = self._incident(vertex)
        union = frozenset().union(*(self.edges[eid].support for eid in incident)) | {vertex}
        order = sorted(union - {vertex}, key=position.__getitem__) + [vertex]
        joined = [self.edges[eid] for eid in incident] + self._projections(union, incident)
        before = self.stats.tuples
        result = outside_in(joined, order, len(order) - 1, self.query.spec_for(vertex), self.stats)
        for eid in incident:
            del self.edges[eid]
        self._absorb(("U", vertex), result)
        self.steps.append(StepRecord(vertex, "semiring", union, incident, result.size,
                                     self.stats.tuples - before))
        logger.debug("eliminated %s: |U|=%d, output %d tuples", self.query.names[vertex], len(union), result.size)

    def eliminate_product_var(self, vertex: int) -> None:
        base = self.query.base
        size = self.query.domain_size(vertex)
        incident = self._incident(vertex)
        union = frozenset().union(*(self.edges[eid].support for eid in incident)) | {vertex}
        for eid, factor in list(self.edges.items()):
            if eid in incident:
                continue
            if factor.is_idempotent_valued():
                continue
            self.stats.powered_factors += 1
            powered_mults = [0]

            def raise_power(value, k=size):
                result, mults = base.power(value, k)
                powered_mults[0] += mults
                return result

            self.edges[eid] = factor.map_values(raise_power)
            self.stats.power_mults += powered_mults[0]
        if not base.is_idempotent(self.scalar):
            self.scalar, mults = base.power(self.scalar, size)
            self.stats.power_mults += mults
        total = 0
        for eid in incident:
            factor = self.edges.pop(eid)
            keyed = factor.reorder([v for v in factor.order if v != vertex] + [vertex])
            marginal, mults = keyed.product_marginalize(vertex, size)
            self.stats.mults += mults
            total += marginal.size
            self._absorb(eid, marginal)
        self.steps.append(StepRecord(vertex, "product", union, incident, total))
        logger.debug("product-eliminated %s over %d factors", self.query.names[vertex], len(incident))

    def eliminate_free_var(self, vertex: int, position: Dict[int, int]) -> None:
        """Retain ψ_{U_k}; replace ∂(k) by its 01-OR projection onto U_k - {k}."""
        incident = self._incident(vertex)
        union = frozenset().union(*(self.edges[eid].support for eid in incident)) | {vertex}
        order = sorted(union, key=position.__getitem__)
        indicators = [self.edges[eid].indicator_projection(union) for eid in incident]
        indicators += [factor.indicator_projection(union) for eid, factor in self.edges.items()
                       if eid not in incident and factor.support & union]
        before = self.stats.tuples
        witness = outside_in(indicators, order, len(order), self.query.base, self.stats)
        self.retained.append(witness)
        for eid in incident:
            del self.edges[eid]
        rest = union - {vertex}
        if rest:
            self._absorb(("U", vertex), witness.indicator_projection(rest))
        else:
            base = self.query.base
            self._absorb(("U", vertex), ListingFactor((), base, {(): base.one} if witness.size else {}))
        self.steps.append(StepRecord(vertex, FREE, union, incident, witness.size, self.stats.tuples - before))

    # ------------------------------------------------------------------ driver

    def inside_out(self, order: Sequence[int], output_phase: str = FACTORIZED,
                   checked: bool = True) -> ListingFactor:
        query = self.query
        order = check_ordering(query.hypergraph, order)
        if checked and not evo_contains(query, order):
            raise OrderingRejectedError(
                f"ordering {[query.names[v] for v in order]} is not equivalent to the written expression")
        if output_phase not in (FACTORIZED, DIRECT):
            raise ValueError(f"Unknown output phase: {output_phase}")
        self._reset()
        position = {v: i for i, v in enumerate(order)}
        for vertex in reversed(order[query.f:]):
            if query.is_product(vertex):
                self.eliminate_product_var(vertex)
            else:
                self.eliminate_semiring_var(vertex, position)
        base = query.base
        if query.f == 0:
            entries = {} if base.is_zero(self.scalar) else {(): self.scalar}
            return ListingFactor((), base, entries, "phi")

        self.residual = list(self.edges.values())
        self.residual_scalar = residual_scalar = self.scalar
        for vertex in reversed(order[:query.f]):
            self.eliminate_free_var(vertex, position)
        if base.is_zero(self.scalar) or base.is_zero(residual_scalar):
            return ListingFactor(order[:query.f], base, {}, "phi")

        joined = list(self.residual)
        if output_phase == FACTORIZED:
            joined += self.retained
        output = outside_in(joined, order[:query.f], query.f, base, self.stats)
        if residual_scalar != base.one:
            output = output.map_values(lambda value: base.mul(residual_scalar, value))
        output.name = "phi"
        return output

    def enumerate_output(self, order: Sequence[int], delays: Optional[List[int]] = None
                         ) -> Iterator[Tuple[Tuple[int, ...], Any]]:
        """
        Stream output tuples keyed in `order[:f]` by a depth-first walk over the
        residual factors and the retained ψ_{U_k}; `delays` collects the trie
        seeks spent between consecutive emissions.
        """
        query = self.query
        self.inside_out(order, FACTORIZED)
        base = query.base
        if query.f == 0 or base.is_zero(self.scalar):
            return
        scale = self.residual_scalar
        join = _LeapfrogJoin(list(self.residual) + self.retained, order[:query.f], base, self.stats)
        last = 0
        for key, value in join.bindings():
            value = base.mul(scale, value)
            if base.is_zero(value):
                continue
            now = join.seeks
            if delays is not None:
                delays.append(now - last)
            last = now
            yield key, value

    def agm_estimates(self) -> Dict[int, float]:
        """AGM_𝓗(U_k) per recorded step, with the input factor sizes."""
        hypergraph = self.query.hypergraph
        sizes = {factor.name: max(1, factor.size) for factor in self.query.factors}
        return {step.vertex: agm_bound(hypergraph, step.union, sizes, self.config).bound
                for step in self.steps}

    def eval(self, ordering: Union[str, Sequence[int]] = "auto", output_phase: str = FACTORIZED,
             checked: bool = True, with_agm: bool = False) -> EvalResult:
        """
        Pick an ordering (`auto`: exact faqw when LinEx is small, else the
        approximation; `approx`; or an explicit sequence) and run InsideOut.
        """
        query = self.query
        method, truncated = "given", False
        if isinstance(ordering, str):
            if ordering == "auto":
                choice = choose_ordering(query, self.config)
            elif ordering == "approx":
                choice = faqw_approx(query, "exact" if query.n <= self.config.fhtw_exact_cap else "greedy",
                                     self.config)
            else:
                raise ValueError(f"Unknown ordering strategy: {ordering}")
            order, width, method, truncated = choice.ordering, choice.width, choice.method, choice.truncated
        else:
            order = tuple(ordering)
            width = faqw_of_ordering(query, check_ordering(query.hypergraph, order),
                                     RhoStar(query.hypergraph, self.config))
        logger.info("evaluating with ordering %s (faqw %s)", [query.names[v] for v in order], width)
        output = self.inside_out(order, output_phase, checked)
        result = EvalResult(output, tuple(order), width, list(self.steps), self.stats, method, truncated)
        if with_agm:
            result.agm = self.agm_estimates()
        return result

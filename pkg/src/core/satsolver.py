"""
SatSolver - β-acyclic SAT and weighted model counting
Clauses are box factors: `weight` on the falsifying box, 1 elsewhere.
Variables are DIMACS-style integers 1..n; literals are signed integers.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple
import logging

from .config import DEFAULT_CONFIG, FAQConfig
from .errors import FactorDataError, NotBetaAcyclicError, SizeLimitError
from .hypergraph import Hypergraph, is_beta_acyclic

logger = logging.getLogger("faq.sat")


@dataclass(frozen=True)
class WeightedClause:
    literals: FrozenSet[int]
    weight: Fraction = Fraction(0)

    @classmethod
    def from_literals(cls, literals: Iterable[int], weight=0) -> Optional["WeightedClause"]:
        """None for a tautology (x ∨ x̄ ∨ ...), which is 1 everywhere."""
        lits = frozenset(int(l) for l in literals)
        if 0 in lits:
            raise FactorDataError("literal 0 is the DIMACS terminator, not a literal")
        if any(-l in lits for l in lits):
            return None
        weight = Fraction(weight)
        if weight < 0:
            raise FactorDataError(f"clause weight {weight} is negative")
        return cls(lits, weight)

    @property
    def variables(self) -> FrozenSet[int]:
        return frozenset(abs(l) for l in self.literals)

    def falsified_by(self, assignment: Dict[int, bool]) -> bool:
        return all(assignment[abs(l)] != (l > 0) for l in self.literals)

    def value(self, assignment: Dict[int, bool]) -> Fraction:
        return self.weight if self.falsified_by(assignment) else Fraction(1)

    def implies(self, other_literals: FrozenSet[int]) -> bool:
        return self.literals <= other_literals

    def without(self, variable: int) -> FrozenSet[int]:
        return frozenset(l for l in self.literals if abs(l) != variable)

    def __str__(self) -> str:
        body = " ".join(str(l) for l in sorted(self.literals, key=lambda l: (abs(l), l)))
        return f"({body}; w={self.weight})"


@dataclass
class WeightedCNF:
    variable_count: int
    clauses: List[WeightedClause] = field(default_factory=list)
    scalar: Fraction = Fraction(1)
    empty_clauses: int = 0

    def __post_init__(self):
        kept = []
        for clause in self.clauses:
            stray = [v for v in clause.variables if not 1 <= v <= self.variable_count]
            if stray:
                raise FactorDataError(f"clause {clause} uses variables {stray} outside 1..{self.variable_count}")
            if clause.literals:
                kept.append(clause)
            else:
                self.scalar *= clause.weight
                self.empty_clauses += 1
        self.clauses = kept
        self.scalar = Fraction(self.scalar)

    @classmethod
    def from_lists(cls, variable_count: int, clauses: Sequence[Sequence[int]],
                   weights: Optional[Sequence] = None) -> "WeightedCNF":
        weights = list(weights) if weights is not None else [0] * len(clauses)
        built = []
        for literals, weight in zip(clauses, weights):
            clause = WeightedClause.from_literals(literals, weight)
            if clause is not None:
                built.append(clause)
        return cls(variable_count, built)

    def hypergraph(self) -> Hypergraph:
        """Vertex v-1 per variable v; one edge per clause."""
        return Hypergraph(self.variable_count,
                          [(i, [v - 1 for v in clause.variables]) for i, clause in enumerate(self.clauses)])

    def as_hard(self) -> "WeightedCNF":
        """Every clause at weight 0: the count becomes the number of models."""
        hard = WeightedCNF(self.variable_count, [WeightedClause(c.literals) for c in self.clauses])
        if self.empty_clauses:
            hard.scalar = Fraction(0)
            hard.empty_clauses = self.empty_clauses
        return hard

    def value(self, assignment: Dict[int, bool]) -> Fraction:
        total = self.scalar
        for clause in self.clauses:
            total *= clause.value(assignment)
            if total == 0:
                break
        return total


# ------------------------------------------------------------------ NEO

def neo_ordering(cnf: WeightedCNF) -> Tuple[int, ...]:
    """Nested elimination order over variables 1..n; elimination runs from its end."""
    ok, neo = is_beta_acyclic(cnf.hypergraph())
    if not ok:
        raise NotBetaAcyclicError("clause hypergraph is not β-acyclic")
    return tuple(v + 1 for v in neo)


def _check_chain(incident: Sequence[WeightedClause], variable: int) -> None:
    ordered = sorted((c.variables for c in incident), key=len)
    for smaller, larger in zip(ordered, ordered[1:]):
        if not smaller <= larger:
            raise NotBetaAcyclicError(f"clauses on variable {variable} do not form an inclusion chain")


# ------------------------------------------------------------------ SAT

@dataclass
class ResolutionStep:
    variable: int
    before: int
    after: int


def sat_beta_acyclic(cnf: WeightedCNF, trace: Optional[List[ResolutionStep]] = None) -> bool:
    """Davis-Putnam along the reverse NEO; every resolvent is a tautology or subsumed."""
    if cnf.empty_clauses:
        return False
    order = neo_ordering(cnf)
    clauses: Set[FrozenSet[int]] = {c.literals for c in cnf.clauses}
    for variable in reversed(order):
        positive = [c for c in clauses if variable in c]
        negative = [c for c in clauses if -variable in c]
        before = len(clauses)
        clauses.difference_update(positive)
        clauses.difference_update(negative)
        for p in positive:
            for n in negative:
                resolvent = (p - {variable}) | (n - {-variable})
                if any(-l in resolvent for l in resolvent):
                    continue
                if not resolvent:
                    logger.debug("empty resolvent on variable %d", variable)
                    if trace is not None:
                        trace.append(ResolutionStep(variable, before, len(clauses) + 1))
                    return False
                clauses.add(frozenset(resolvent))
        if trace is not None:
            trace.append(ResolutionStep(variable, before, len(clauses)))
    return True


# ------------------------------------------------------------------ #WSAT

def _color(incident: Sequence[WeightedClause], target: FrozenSet[int]) -> Fraction:
    total = Fraction(1)
    for clause in incident:
        if clause.implies(target):
            total *= clause.weight
    return total


def eliminate_weighted(incident: Sequence[WeightedClause], variable: int
                       ) -> Tuple[List[WeightedClause], Fraction]:
    """
    Replace ∂(x) by one clause per incident clause plus a scalar, such that the
    product of the new clauses equals Σ_x of the product of the old ones.
    Returns (non-empty new clauses, scalar including the factor 2).
    """
    _check_chain(incident, variable)
    ordered = sorted(enumerate(incident), key=lambda item: (len(item[1].variables), item[0]))
    chain = [clause for _, clause in ordered]
    positive = [(i, c) for i, c in enumerate(chain) if variable in c.literals]
    negative = [(i, c) for i, c in enumerate(chain) if -variable in c.literals]
    scalar = Fraction(2)
    emitted: List[WeightedClause] = []
    for i, clause in enumerate(chain):
        rest = clause.without(variable)
        with_pos = rest | {variable}
        with_neg = rest | {-variable}
        below = (_color([c for j, c in positive if j < i], with_pos)
                 + _color([c for j, c in negative if j < i], with_neg))
        upto = (_color([c for j, c in positive if j <= i], with_pos)
                + _color([c for j, c in negative if j <= i], with_neg))
        weight = Fraction(0) if below == 0 else upto / below
        if rest:
            emitted.append(WeightedClause(rest, weight))
        else:
            scalar *= weight
    return emitted, scalar


@dataclass
class CountStep:
    variable: int
    incident: List[WeightedClause]
    emitted: List[WeightedClause]
    scalar: Fraction
    clauses_before: int
    clauses_after: int


def count_beta_acyclic(cnf: WeightedCNF, trace: Optional[List[CountStep]] = None) -> Fraction:
    """Σ over all assignments of the clause product; #SAT when every weight is 0."""
    order = neo_ordering(cnf)
    clauses = list(cnf.clauses)
    scalar = cnf.scalar
    for variable in reversed(order):
        if scalar == 0:
            break
        incident = [c for c in clauses if variable in c.variables]
        others = [c for c in clauses if variable not in c.variables]
        emitted, factor = eliminate_weighted(incident, variable)
        before = len(clauses)
        clauses = others + emitted
        scalar *= factor
        logger.debug("eliminated x%d: %d incident clauses, scalar factor %s", variable, len(incident), factor)
        if trace is not None:
            trace.append(CountStep(variable, incident, emitted, factor, before, len(clauses)))
    return scalar


def brute_force_count(cnf: WeightedCNF, config: Optional[FAQConfig] = None) -> Fraction:
    config = config or DEFAULT_CONFIG
    if cnf.variable_count > config.sat_brute_cap:
        raise SizeLimitError("brute-force SAT variables", cnf.variable_count, config.sat_brute_cap)
    total = Fraction(0)
    variables = range(1, cnf.variable_count + 1)
    for bits in cartesian((False, True), repeat=cnf.variable_count):
        total += cnf.value(dict(zip(variables, bits)))
    return total

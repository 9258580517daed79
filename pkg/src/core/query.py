"""
Query - Functional Aggregate Query Model
Variables, domains, free prefix, per-variable aggregates and factor bindings,
plus the aggregate-regime checks the ordering machinery relies on
"""
from itertools import product as cartesian
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union
import logging

from .errors import FactorDataError, UnknownNameError, UnsupportedQueryError
from .factor import ListingFactor
from .hypergraph import Hypergraph
from .semiring import PRODUCT, Carrier, SemiringSpec, get_carrier, lift_payload

logger = logging.getLogger("faq.query")

FREE = "free"

# REGIMES
SEMIRING_ONLY = "semiring"
IDEMPOTENT = "idempotent"
GENERAL = "general"

DOMAIN_FACTOR_PREFIX = "dom:"

FactorTable = Tuple[str, Sequence[str], Sequence[Tuple[Sequence[Any], Any]]]


def label_key(label: Any) -> Tuple[int, Any]:
    """Numbers sort numerically and before everything else."""
    if isinstance(label, bool):
        return (1, str(label))
    if isinstance(label, (int, float)):
        return (0, label)
    try:
        return (0, int(str(label)))
    except ValueError:
        return (1, str(label))


class Query:
    """
    φ(x_F) = ⊕^{(f+1)} … ⊕^{(n)} ⊗_S ψ_S. Vertices are 0..n-1: the free
    variables first, then the bound ones in written (scope) order.
    """

    def __init__(self, carrier: Carrier, names: Sequence[str], domains: Sequence[Sequence[Any]],
                 free_count: int, aggregates: Sequence[str], factors: Sequence[ListingFactor],
                 idempotent_domain: Optional[Iterable[Any]] = None):
        self.carrier = carrier
        self.names: List[str] = list(names)
        self.domains: List[List[Any]] = [list(d) for d in domains]
        self.f = free_count
        self.aggregates: List[str] = list(aggregates)
        self.base = SemiringSpec(carrier)
        self.idempotent_domain: FrozenSet[Any] = frozenset(
            idempotent_domain if idempotent_domain is not None else (carrier.zero, carrier.one))
        n = len(self.names)
        if len(set(self.names)) != n:
            raise UnknownNameError("variable declared twice")
        if len(self.domains) != n:
            raise UnknownNameError("one domain per variable is required")
        if len(self.aggregates) != n - free_count:
            raise UnknownNameError("one aggregate per bound variable is required")
        for tag in self.aggregates:
            if tag != PRODUCT and tag not in carrier.aggregates:
                raise UnknownNameError(f"aggregate {tag!r} is not defined over carrier {carrier.tag}")
        if n > free_count and all(tag == PRODUCT for tag in self.aggregates):
            raise UnsupportedQueryError("a query with bound variables needs at least one semiring aggregate")
        if carrier.reduction is not None and PRODUCT in self.aggregates:
            raise UnsupportedQueryError(f"product aggregates are not supported over {carrier.tag}")
        for index, domain in enumerate(self.domains):
            if not domain:
                raise FactorDataError(f"variable {self.names[index]} has an empty domain")

        self.factors: List[ListingFactor] = list(factors)
        seen = set()
        for factor in self.factors:
            if factor.name in seen:
                raise UnknownNameError(f"factor {factor.name} declared twice")
            seen.add(factor.name)
            for v in factor.order:
                if not 0 <= v < n:
                    raise UnknownNameError(f"factor {factor.name} uses unknown vertex {v}")
        covered = set().union(*(factor.order for factor in self.factors)) if self.factors else set()
        for v in range(n):
            if v not in covered:
                self.factors.append(ListingFactor.constant(
                    (v,), (len(self.domains[v]),), carrier.one, self.base, DOMAIN_FACTOR_PREFIX + self.names[v]))
        self.hypergraph = Hypergraph(n, [(factor.name, factor.order) for factor in self.factors])

    @classmethod
    def from_tables(cls, semiring: Union[str, Carrier], free: Sequence[str],
                    aggregates: Sequence[Tuple[str, str]], factors: Sequence[FactorTable],
                    domains: Optional[Dict[str, Sequence[Any]]] = None,
                    idempotent_domain: Optional[Iterable[Any]] = None) -> "Query":
        """
        Build from labelled tables. Row values are source payloads; reduction
        carriers lift them. Undeclared domains are inferred from the rows.
        """
        carrier = get_carrier(semiring) if isinstance(semiring, str) else semiring
        names = list(free) + [name for name, _ in aggregates]
        index = {name: i for i, name in enumerate(names)}
        if len(index) != len(names):
            raise UnknownNameError("variable declared twice")
        tags = [carrier.canonical_aggregate(agg) for _, agg in aggregates]
        for fname, fvars, _ in factors:
            for var in fvars:
                if var not in index:
                    raise UnknownNameError(f"factor {fname} uses undeclared variable {var}")

        labels: List[List[Any]] = []
        for name in names:
            if domains and name in domains:
                labels.append(list(domains[name]))
                continue
            seen = set()
            for _, fvars, rows in factors:
                for position, var in enumerate(fvars):
                    if var == name:
                        seen.update(key[position] for key, _ in rows)
            if not seen:
                raise FactorDataError(f"variable {name} has no domain and appears in no factor row")
            labels.append(sorted(seen, key=label_key))
        ordinals = [{label: i for i, label in enumerate(domain)} for domain in labels]

        base = SemiringSpec(carrier)
        built: List[ListingFactor] = []
        for fname, fvars, rows in factors:
            order = [index[var] for var in fvars]
            tuples = []
            for key, value in rows:
                if len(key) != len(order):
                    raise FactorDataError(f"factor {fname}: row {tuple(key)} has arity {len(key)}, expected {len(order)}")
                try:
                    coded = tuple(ordinals[v][label] for v, label in zip(order, key))
                except KeyError as missing:
                    raise FactorDataError(f"factor {fname}: value {missing} outside the declared domain")
                if carrier.reduction is not None:
                    value = lift_payload(carrier.reduction, value)
                tuples.append((coded, value))
            built.append(ListingFactor.build(order, tuples, base, fname))
        return cls(carrier, names, labels, len(free), tags, built, idempotent_domain)

    @classmethod
    def from_quantified(cls, free: Sequence[str], prefix: Sequence[Tuple[str, str]],
                        relations: Sequence[Tuple[str, Sequence[str], Iterable[Sequence[Any]]]],
                        count: bool = False, domains: Optional[Dict[str, Sequence[Any]]] = None) -> "Query":
        """
        QCQ over the Boolean semiring (∃ -> or, ∀ -> product), or #QCQ over the
        naturals when `count` is set: the free variables become Σ-bound and ∃ maps to max.
        """
        quantifier_map = {"exists": "max" if count else "or", "forall": PRODUCT}
        aggregates: List[Tuple[str, str]] = []
        if count:
            aggregates.extend((name, "sum") for name in free)
            free = []
        for quantifier, name in prefix:
            if quantifier not in quantifier_map:
                raise UnknownNameError(f"unknown quantifier {quantifier!r}")
            aggregates.append((name, quantifier_map[quantifier]))
        one = 1 if count else True
        factors = [(name, fvars, [(tuple(row), one) for row in rows]) for name, fvars, rows in relations]
        return cls.from_tables("nat" if count else "bool", free, aggregates, factors, domains)

    # ------------------------------------------------------------------ structure

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def written_order(self) -> Tuple[int, ...]:
        return tuple(range(self.n))

    def tag(self, vertex: int) -> str:
        return FREE if vertex < self.f else self.aggregates[vertex - self.f]

    def is_product(self, vertex: int) -> bool:
        return vertex >= self.f and self.aggregates[vertex - self.f] == PRODUCT

    @property
    def product_vars(self) -> FrozenSet[int]:
        return frozenset(v for v in range(self.f, self.n) if self.is_product(v))

    @property
    def semiring_vars(self) -> FrozenSet[int]:
        return frozenset(v for v in range(self.f, self.n) if not self.is_product(v))

    @property
    def free_vars(self) -> Tuple[int, ...]:
        return tuple(range(self.f))

    def domain_size(self, vertex: int) -> int:
        return len(self.domains[vertex])

    def spec_for(self, vertex: int) -> SemiringSpec:
        """The semiring whose ⊕ eliminates `vertex` (the base spec for free/product)."""
        tag = self.tag(vertex)
        if tag in (FREE, PRODUCT):
            return self.base
        return SemiringSpec(self.carrier, tag)

    def factor(self, name: str) -> ListingFactor:
        for factor in self.factors:
            if factor.name == name:
                return factor
        raise UnknownNameError(f"unknown factor {name}")

    def vertex(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownNameError(f"unknown variable {name}")

    # ------------------------------------------------------------------ regimes

    def _closed(self, op) -> bool:
        return all(op(a, b) in self.idempotent_domain for a in self.idempotent_domain for b in self.idempotent_domain)

    def closed_aggregate(self, tag: str) -> bool:
        """Whether the aggregate maps 𝔻_I × 𝔻_I into 𝔻_I."""
        op = self.carrier.times if tag == PRODUCT else self.carrier.aggregates[tag]
        return self._closed(op)

    def idempotent_regime_eligible(self) -> bool:
        """
        Every factor value in 𝔻_I, ⊗ and every aggregate from the first product
        variable onward closed under 𝔻_I, and distinct semiring aggregates not
        functionally identical on 𝔻_I.
        """
        products = sorted(self.product_vars)
        if not products:
            return False
        for factor in self.factors:
            if any(value not in self.idempotent_domain for _, value in factor):
                return False
        if not self._closed(self.carrier.times):
            return False
        for v in range(products[0], self.n):
            if not self.closed_aggregate(self.tag(v)):
                return False
        tags = sorted({self.tag(v) for v in self.semiring_vars})
        pairs = list(cartesian(self.idempotent_domain, repeat=2))
        for i, a in enumerate(tags):
            for b in tags[i + 1:]:
                op_a, op_b = self.carrier.aggregates[a], self.carrier.aggregates[b]
                if all(op_a(x, y) == op_b(x, y) for x, y in pairs):
                    return False
        return True

    def regime(self) -> str:
        if not self.product_vars:
            return SEMIRING_ONLY
        if self.idempotent_regime_eligible():
            return IDEMPOTENT
        logger.warning("query is outside the idempotent-product regime; extending edges by the product variables")
        return GENERAL

    def unclosed_semiring_vars(self) -> FrozenSet[int]:
        return frozenset(v for v in self.semiring_vars if not self.closed_aggregate(self.tag(v)))

    def __repr__(self) -> str:
        tags = ", ".join(f"{self.names[v]}:{self.tag(v)}" for v in range(self.n))
        return f"Query({self.carrier.tag}; {tags}; factors={[f.name for f in self.factors]})"

import random
import sys
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import pytest
from hypothesis import strategies as st

# Add src to path for imports
sys.path.append(str(Path(__file__).parent.parent / "src"))

from core.factor import ListingFactor  # noqa: E402
from core.hypergraph import Hypergraph  # noqa: E402
from core.query import Query  # noqa: E402
from core.semiring import PRODUCT, SemiringSpec, get_carrier  # noqa: E402

VALUES = {
    "bool": [True],
    "nat": [1, 2, 3],
    "rat": [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(-3, 2)],
    "maxprod": [Fraction(1, 2), Fraction(1), Fraction(2)],
}
ONE = {"bool": True, "nat": 1, "rat": Fraction(1), "maxprod": Fraction(1)}
PATTERNS = ("ss", "blocks", "idempotent", "general", "dangling")


def all_ones(order, sizes, carrier="nat", name=""):
    spec = SemiringSpec(get_carrier(carrier))
    return ListingFactor.constant(order, sizes, spec.one, spec, name)


def sum_max_query(values=None):
    """Σ_{x1} max_{x2} Σ_{x3} ψ12 ψ13 over {0,1}."""
    carrier = get_carrier("nat")
    spec = SemiringSpec(carrier)
    psi12 = ListingFactor.constant((0, 1), (2, 2), 1, spec, "psi12")
    psi13 = ListingFactor.constant((0, 2), (2, 2), 1, spec, "psi13")
    if values is not None:
        psi12 = ListingFactor.build((0, 1), values[0], spec, "psi12")
        psi13 = ListingFactor.build((0, 2), values[1], spec, "psi13")
    return Query(carrier, ["x1", "x2", "x3"], [[0, 1]] * 3, 0, ["sum", "max", "sum"], [psi12, psi13])


def star_hypergraph(n):
    """V = [n+1], E = {[n], {i, n+1}}; vertex n is the hub."""
    edges = [("S", list(range(n)))] + [(f"R{i}", [i, n]) for i in range(n)]
    return Hypergraph(n + 1, edges)


def star_query(n, carrier="nat"):
    """Σ over the n leaves, then max over the hub."""
    spec = SemiringSpec(get_carrier(carrier))
    sizes = (2,) * n
    factors = [ListingFactor.constant(tuple(range(n)), sizes, spec.one, spec, "S")]
    factors += [ListingFactor.constant((i, n), (2, 2), spec.one, spec, f"R{i}") for i in range(n)]
    return Query(spec.carrier, [f"x{i + 1}" for i in range(n + 1)], [[0, 1]] * (n + 1), 0,
                 ["sum"] * n + ["max"], factors)


def chen_dalmau_query(n, relations=None):
    """∀x1..∀xn ∃x_{n+1} S(x1..xn) ∧ ⋀ R(xi, x_{n+1})."""
    names = [f"x{i + 1}" for i in range(n + 1)]
    box = [tuple(bits) for bits in _box(n)]
    if relations is None:
        relations = [("S", names[:n], box)] + [(f"R{i}", [names[i], names[n]], [(0, 0), (1, 1)])
                                               for i in range(n)]
    prefix = [("forall", name) for name in names[:n]] + [("exists", names[n])]
    return Query.from_quantified([], prefix, relations, domains={name: [0, 1] for name in names})


def _box(n, size=2):
    keys = [()]
    for _ in range(n):
        keys = [k + (x,) for k in keys for x in range(size)]
    return keys


def random_query(rng: random.Random, pattern: str = None, max_vars: int = 5, max_factors: int = 5,
                 carriers=("bool", "nat", "rat", "maxprod")) -> Query:
    """Small random FAQ over one of the aggregate regimes."""
    pattern = pattern or rng.choice(PATTERNS)
    tag = rng.choice(carriers)
    carrier = get_carrier(tag)
    spec = SemiringSpec(carrier)
    n = rng.randint(1, max_vars)
    f = rng.randint(0, n)
    if pattern in ("idempotent", "general", "dangling") and f == n:
        f = rng.randint(0, n - 1) if n > 1 else 0
    sizes = [rng.randint(1, 3) for _ in range(n)]
    semiring_aggs = list(carrier.aggregates)

    bound = n - f
    if pattern == "ss":
        aggregates = [carrier.default_aggregate] * bound
    elif pattern == "blocks":
        aggregates = [rng.choice(semiring_aggs) for _ in range(bound)]
    else:
        aggregates = [rng.choice(semiring_aggs + [PRODUCT]) for _ in range(bound)]
        if bound and all(a == PRODUCT for a in aggregates):
            aggregates[rng.randrange(bound)] = rng.choice(semiring_aggs)
        if bound >= 2 and PRODUCT not in aggregates:
            aggregates[rng.randrange(bound)] = PRODUCT
            if all(a == PRODUCT for a in aggregates):
                aggregates[0] = semiring_aggs[0]

    values = [ONE[tag]] if pattern == "idempotent" else VALUES[tag]
    scope = list(range(n))
    products = [f + i for i, a in enumerate(aggregates) if a == PRODUCT]
    if pattern == "dangling" and products and n > 1:
        # one product variable kept out of every factor but product-only ones
        loose = rng.choice(products)
        scope.remove(loose)
    factors = []
    for index in range(rng.randint(1, max_factors)):
        arity = rng.randint(1, min(3, len(scope)))
        order = tuple(rng.sample(scope, arity))
        rows = [(key, rng.choice(values)) for key in _product(sizes[v] for v in order)
                if rng.random() < 0.7]
        factors.append(ListingFactor.build(order, rows, spec, f"F{index}"))
    if len(scope) < n and rng.random() < 0.5:
        order = (loose,) + tuple(v for v in products if v != loose)[:1]
        rows = [(key, rng.choice(values)) for key in _product(sizes[v] for v in order)]
        factors.append(ListingFactor.build(order, rows, spec, "G"))
    return Query(carrier, [f"v{i}" for i in range(n)], [list(range(s)) for s in sizes], f,
                 aggregates, factors)


def _product(sizes):
    keys = [()]
    for size in sizes:
        keys = [k + (x,) for k in keys for x in range(size)]
    return keys


@st.composite
def hypergraphs(draw, max_vertices=5, max_edges=6):
    """Covered hypergraphs over 0..n-1."""
    n = draw(st.integers(min_value=1, max_value=max_vertices))
    subsets = [frozenset(c) for k in range(1, n + 1) for c in combinations(range(n), k)]
    edges = draw(st.lists(st.sampled_from(subsets), min_size=1, max_size=max_edges))
    covered = frozenset().union(*edges)
    edges = list(edges) + [frozenset([v]) for v in range(n) if v not in covered]
    return Hypergraph(n, list(enumerate(edges)))


@st.composite
def queries(draw, pattern=None, max_vars=4):
    seed = draw(st.integers(min_value=0, max_value=2 ** 32 - 1))
    return random_query(random.Random(seed), pattern, max_vars=max_vars, max_factors=4)


@pytest.fixture
def sum_max():
    return sum_max_query()


@pytest.fixture
def triangle():
    return Hypergraph(3, [("R", [0, 1]), ("S", [1, 2]), ("T", [0, 2])])

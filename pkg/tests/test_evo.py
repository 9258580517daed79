import random
from fractions import Fraction
from itertools import permutations, product

import pytest
from hypothesis import given, settings

from conftest import chen_dalmau_query, queries, random_query, star_query, sum_max_query
from core.config import FAQConfig
from core.engine import FAQEngine, brute_force_eval
from core.errors import InvalidOrderingError, InvariantViolationError
from core.evo import (PrecedencePoset, choose_ordering, evo_contains, expression_tree, faqw_approx,
                      faqw_exact_query, faqw_of_ordering, is_cw_equivalent, linear_extensions,
                      node_hypergraph, precedence_poset)
from core.hypergraph import extended_components
from core.query import GENERAL, IDEMPOTENT, Query
from core.semiring import PRODUCT
from core.width import RhoStar, fhtw_exact


def dangling_product_query():
    """∏x1 ∃x2 ∏x3 P(x1,x2) Q(x1,x3) over the Boolean semiring."""
    rows = [((a, b), True) for a in (0, 1) for b in (0, 1) if (a, b) != (1, 1)]
    return Query.from_tables("bool", [], [("x1", "prod"), ("x2", "or"), ("x3", "prod")],
                             [("P", ["x1", "x2"], rows), ("Q", ["x1", "x3"], rows)])


def power_of_sums_query():
    """∏x Σy ∏z F(x,y) over ℕ; z only reaches the rest through the product extension."""
    rows = [((0, 0), 2), ((0, 1), 3), ((1, 0), 1), ((1, 1), 1)]
    return Query.from_tables("nat", [], [("x", "prod"), ("y", "sum"), ("z", "prod")],
                             [("F", ["x", "y"], rows)], domains={"z": [0, 1]})


def forall_exists_forall_query():
    """∀x ∃y ∀z F(x,y) G(y,z) H(x,z) with G the equality relation."""
    full = [((a, b), True) for a in (0, 1) for b in (0, 1)]
    return Query.from_tables("bool", [], [("x", "prod"), ("y", "or"), ("z", "prod")],
                             [("F", ["x", "y"], full), ("G", ["y", "z"], [((0, 0), True), ((1, 1), True)]),
                              ("H", ["x", "z"], full)])


def eight_variable_query():
    """max x1 max x2 Σx3 Σx4 ∏x5 max x6 ∏x7 max x8 over ℕ with {0,1}-valued factors."""
    aggregates = list(zip([f"x{i}" for i in range(1, 9)],
                          ["max", "max", "sum", "sum", "prod", "max", "prod", "max"]))
    scopes = ["13", "24", "34", "15", "16", "26", "257", "167", "278"]
    factors = [(f"psi{s}", [f"x{c}" for c in s], [(key, 1) for key in product((0, 1), repeat=len(s))])
               for s in scopes]
    return Query.from_tables("nat", [], aggregates, factors)


class TestExpressionTree:
    def test_sum_max_tree(self, sum_max):
        tree = expression_tree(sum_max)
        rendered = tree.render(sum_max.names)
        assert "[sum] {x1,x3}" in rendered
        assert "[max] {x2}" in rendered

    def test_dangling_product_merges_into_parent(self):
        query = dangling_product_query()
        assert query.regime() == IDEMPOTENT
        top = expression_tree(query).top()
        assert top.variables == {0, 2}

    def test_first_level_dangling_set(self):
        query = eight_variable_query()
        assert query.regime() == IDEMPOTENT
        components, dangling = extended_components(query.hypergraph, {0, 1}, {4, 6})
        assert dangling == {4, 6}
        assert sorted(sorted(c.vertices) for c in components) == [[2, 3], [5, 6], [6, 7]]

    def test_compression_lifts_x6_into_the_root(self):
        query = eight_variable_query()
        tree = expression_tree(query)
        top = tree.top()
        assert top.variables == {0, 1, 5} and top.tag == "max"
        children = [tree.nodes[c] for c in top.children]
        assert sorted(sorted(c.variables) for c in children) == [[2, 3], [4, 6], [6], [6]]
        below_x7 = [tree.nodes[g].variables for c in children if c.variables == {6} for g in c.children]
        assert below_x7 == [{7}]
        assert "[max] {x1,x2,x6}" in tree.render(query.names)

    def test_product_only_child_leaves_no_trace(self):
        full = [((a, b), True) for a in (0, 1) for b in (0, 1)]
        query = Query.from_tables("bool", [], [("a", "or"), ("b", "or"), ("c", "or"), ("z", "prod")],
                                  [("AB", ["a", "b"], full), ("BC", ["b", "c"], full),
                                   ("AZ", ["a", "z"], full), ("CZ", ["c", "z"], full)])
        tree = expression_tree(query)
        top = tree.top()
        node = node_hypergraph(query, tree, top.id)
        assert all(not trace for trace in node.child_edges.values())
        assert fhtw_exact(node.hypergraph).width == 1
        assert faqw_exact_query(query).width == 1

    def test_node_hypergraph_of_top(self, sum_max):
        tree = expression_tree(sum_max)
        top = tree.top()
        node = node_hypergraph(sum_max, tree, top.id)
        assert node.hypergraph.vertex_set == frozenset({0, 2})
        assert set(node.child_edges.values()) == {frozenset({0})}


class TestPoset:
    def test_sum_max_poset(self, sum_max):
        poset = precedence_poset(sum_max)
        assert poset.pairs() == [(0, 1), (2, 1)]
        assert linear_extensions(poset).orderings == [(0, 2, 1), (2, 0, 1)]

    def test_transitive_closure_and_hasse(self):
        poset = PrecedencePoset([0, 1, 2], [(0, 1), (1, 2)])
        assert poset.less(0, 2)
        assert poset.hasse_edges() == [(0, 1), (1, 2)]
        assert poset.predecessors(2) == {0, 1}

    def test_cycle_rejected(self):
        with pytest.raises(InvariantViolationError):
            PrecedencePoset([0, 1], [(0, 1), (1, 0)])

    def test_truncation(self):
        poset = precedence_poset(star_query(3))
        full = linear_extensions(poset)
        assert len(full.orderings) == 6 and not full.truncated
        cut = linear_extensions(poset, limit=4)
        assert cut.truncated and cut.orderings == full.orderings[:4]

    def test_free_variables_come_first(self):
        query = Query.from_tables("nat", ["a"], [("b", "sum")], [("R", ["a", "b"], [((0, 0), 1)])])
        assert precedence_poset(query).less(0, 1)


class TestEVO:
    def test_sum_max_evo(self, sum_max):
        inside = {order for order in permutations(range(3)) if evo_contains(sum_max, order)}
        assert inside == {(0, 1, 2), (0, 2, 1), (2, 0, 1)}

    def test_cw_equivalence(self, sum_max):
        assert is_cw_equivalent(sum_max, (0, 1, 2), (0, 2, 1))
        assert not is_cw_equivalent(sum_max, (0, 1, 2), (1, 0, 2))

    def test_not_a_permutation(self, sum_max):
        with pytest.raises(InvalidOrderingError):
            evo_contains(sum_max, (0, 1))

    def test_written_order_with_dangling_product(self):
        query = dangling_product_query()
        assert evo_contains(query, (0, 1, 2))
        assert evo_contains(query, (0, 2, 1))
        assert not evo_contains(query, (1, 0, 2))

    def test_product_variable_shared_with_a_component_stays_behind(self):
        query = power_of_sums_query()
        assert query.regime() == GENERAL
        assert linear_extensions(precedence_poset(query)).orderings == [(0, 1, 2)]
        assert not evo_contains(query, (0, 2, 1))
        assert dict(brute_force_eval(query).items()) == {(): 26}
        assert FAQEngine(query).inside_out((0, 1, 2)) == brute_force_eval(query)
        assert dict(FAQEngine(query).inside_out((0, 2, 1), checked=False).items()) == {(): 100}

    def test_idempotent_product_copy_does_not_jump_ahead(self):
        query = forall_exists_forall_query()
        assert query.regime() == IDEMPOTENT
        assert not evo_contains(query, (0, 2, 1))
        assert evo_contains(query, (0, 1, 2))
        assert brute_force_eval(query).size == 0
        assert FAQEngine(query).inside_out((0, 2, 1), checked=False).size == 1

    @given(queries())
    @settings(max_examples=60, deadline=None)
    def test_linear_extensions_are_in_evo(self, query):
        result = linear_extensions(precedence_poset(query), limit=50)
        for order in result.orderings:
            assert evo_contains(query, order)


class TestWidths:
    def test_sum_max_is_acyclic(self, sum_max):
        choice = faqw_exact_query(sum_max)
        assert choice.width == 1
        assert choice.ordering == (0, 2, 1)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_star_faqw(self, n):
        assert faqw_exact_query(star_query(n)).width == 2 - Fraction(1, n)

    def test_chen_dalmau(self):
        choice = faqw_exact_query(chen_dalmau_query(3))
        assert choice.width == Fraction(5, 3)
        assert choice.width <= 2

    def test_faqw_skips_product_steps(self):
        query = dangling_product_query()
        assert faqw_of_ordering(query, (0, 1, 2)) == 1

    def test_choose_ordering_prefers_exact(self, sum_max):
        assert choose_ordering(sum_max).method == "exact"
        approx = choose_ordering(star_query(4), FAQConfig(exact_linex_threshold=2))
        assert approx.method == "approx-exact"

    def test_unknown_oracle(self, sum_max):
        with pytest.raises(ValueError):
            faqw_approx(sum_max, "psychic")

    @given(queries())
    @settings(max_examples=60, deadline=None)
    def test_approximation_is_a_linear_extension(self, query):
        poset = precedence_poset(query)
        choice = faqw_approx(query)
        position = {v: i for i, v in enumerate(choice.ordering)}
        assert all(position[u] < position[v] for u, v in poset.pairs())
        assert choice.width >= faqw_exact_query(query, limit=10_000).width
        assert evo_contains(query, choice.ordering)

    @pytest.mark.parametrize("pattern", ["ss", "blocks", "idempotent"])
    def test_approximation_within_twice_the_optimum(self, pattern):
        rng = random.Random(f"approx-{pattern}")
        for _ in range(50):
            query = random_query(rng, pattern, max_vars=4, max_factors=4)
            exact = faqw_exact_query(query).width
            assert exact <= faqw_approx(query).width <= 2 * exact

    @pytest.mark.parametrize("pattern", ["ss", "blocks", "idempotent"])
    def test_node_lower_bounds(self, pattern):
        rng = random.Random(f"lower-{pattern}")
        samples = [random_query(rng, pattern, max_vars=4, max_factors=4) for _ in range(40)]
        for query in samples + [eight_variable_query()]:
            exact = faqw_exact_query(query).width
            rho = RhoStar(query.hypergraph)
            tree = expression_tree(query)
            for node_id, node in tree.nodes.items():
                if not node.variables or node.tag == PRODUCT:
                    continue
                local = node_hypergraph(query, tree, node_id)
                assert fhtw_exact(local.hypergraph).width <= exact
                assert rho(local.boundary) <= exact

    def test_approximation_on_star(self):
        query = star_query(4)
        assert faqw_approx(query).width == faqw_exact_query(query).width
        assert faqw_approx(query, "greedy").width <= 2

from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import hypergraphs, star_hypergraph
from core.config import FAQConfig
from core.errors import InfeasibleCoverError, InvalidDecompositionError, SizeLimitError
from core.hypergraph import Hypergraph, compose, is_alpha_acyclic
from core.lp import UnboundedLPError, maximize
from core.width import (INFINITE_WIDTH, RhoStar, TreeDecomposition, agm_bound, composed_width_bound,
                        fhtw, fhtw_exact, fhtw_greedy, fractional_cover_number, gyo_join_tree,
                        induced_g_width, integral_cover_number, l_star_size, ordering_from_td,
                        ordering_width, reduce_td, td_from_ordering, validate_td)


class TestSimplex:
    def test_small_packing(self):
        # max x + y s.t. x + 2y <= 4, 3x + y <= 6
        result = maximize([1, 1], [[1, 2], [3, 1]], [4, 6])
        assert result.value == Fraction(14, 5)
        assert result.primal == [Fraction(8, 5), Fraction(6, 5)]
        assert sum(d * b for d, b in zip(result.dual, [4, 6])) == result.value

    def test_unbounded(self):
        with pytest.raises(UnboundedLPError):
            maximize([1, 0], [[0, 1]], [1])

    def test_variable_cap(self):
        with pytest.raises(SizeLimitError):
            maximize([1] * 5, [[1] * 5], [1], FAQConfig(lp_variable_cap=4))

    def test_negative_rhs(self):
        with pytest.raises(ValueError):
            maximize([1], [[1]], [-1])


class TestCovers:
    def test_triangle_fractional_cover(self, triangle):
        cover = fractional_cover_number(triangle, {0, 1, 2})
        assert cover.objective == Fraction(3, 2)
        assert sum(cover.weights.values()) == Fraction(3, 2)
        assert integral_cover_number(triangle, {0, 1, 2}) == 2

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_star_cover(self, n):
        h = star_hypergraph(n)
        assert fractional_cover_number(h, h.vertex_set).objective == 2 - Fraction(1, n)

    def test_uncovered_vertex(self):
        h = Hypergraph(3, [("R", [0, 1])], vertex_set={0, 1, 2})
        with pytest.raises(InfeasibleCoverError) as err:
            fractional_cover_number(h, {0, 2})
        assert err.value.vertex == 2
        assert RhoStar(h)({0, 2}) == INFINITE_WIDTH

    def test_empty_bag(self, triangle):
        assert fractional_cover_number(triangle, set()).objective == 0
        assert integral_cover_number(triangle, set()) == 0

    def test_agm_triangle(self, triangle):
        result = agm_bound(triangle, {0, 1, 2}, {"R": 4, "S": 4, "T": 4})
        assert result.bound == pytest.approx(8.0)
        assert result.uniform == pytest.approx(8.0)

    def test_agm_skewed_sizes(self, triangle):
        result = agm_bound(triangle, {0, 1, 2}, {"R": 1, "S": 100, "T": 100})
        assert result.bound <= 100.0 + 1e-6
        assert result.uniform == pytest.approx(1000.0)

    def test_agm_rejects_empty_factor(self, triangle):
        with pytest.raises(ValueError):
            agm_bound(triangle, {0, 1}, {"R": 0, "S": 1, "T": 1})


class TestDecompositions:
    def test_validate_reports_problems(self, triangle):
        assert validate_td(triangle, TreeDecomposition.from_lists([[0, 1, 2]], []))
        missing = validate_td(triangle, TreeDecomposition.from_lists([[0, 1], [1, 2]], [(0, 1)]))
        assert not missing and missing.edge == "T"
        path = Hypergraph(3, [("A", [0, 1]), ("B", [1, 2]), ("C", [0])])
        broken = TreeDecomposition.from_lists([[0, 1], [1, 2], [0]], [(0, 1), (1, 2)])
        report = validate_td(path, broken)
        assert not report and report.vertex == 0

    def test_reduce_contracts_nested_bags(self):
        path = Hypergraph(3, [("A", [0, 1]), ("B", [1, 2])])
        td = TreeDecomposition.from_lists([[0], [0, 1], [1], [1, 2]], [(0, 1), (1, 2), (2, 3)])
        reduced = reduce_td(td)
        assert sorted(sorted(bag) for bag in reduced.bags.values()) == [[0, 1], [1, 2]]
        assert reduced.tree.number_of_edges() == 1
        assert validate_td(path, reduced)
        assert len(td.bags) == 4

    def test_invalid_td_rejected_by_ordering(self, triangle):
        with pytest.raises(InvalidDecompositionError):
            ordering_from_td(triangle, TreeDecomposition.from_lists([[0, 1]], []))

    def test_join_tree(self):
        path = Hypergraph(4, [("A", [0, 1]), ("B", [1, 2]), ("C", [2, 3])])
        tree = gyo_join_tree(path)
        assert tree.bag_list() == [[0, 1], [1, 2], [2, 3]]
        assert gyo_join_tree(Hypergraph(3, [("R", [0, 1]), ("S", [1, 2]), ("T", [0, 2])])) is None

    @given(hypergraphs())
    @settings(max_examples=60, deadline=None)
    def test_ordering_and_td_agree(self, h):
        order = tuple(h.vertices)
        td = td_from_ordering(h, order)
        assert validate_td(h, td)
        rho = RhoStar(h)
        assert td.width(rho) == induced_g_width(h, order)
        back = ordering_from_td(h, td)
        assert sorted(back) == h.vertices
        assert induced_g_width(h, back) <= td.width(rho)

    @given(hypergraphs())
    @settings(max_examples=60, deadline=None)
    def test_acyclic_means_width_one(self, h):
        if is_alpha_acyclic(h)[0]:
            assert fhtw_exact(h).width == 1
        assert fhtw_exact(h).width >= 1

    def test_measures(self, triangle):
        assert induced_g_width(triangle, (0, 1, 2), "tw") == 2
        assert induced_g_width(triangle, (0, 1, 2), "rho") == 2
        assert induced_g_width(triangle, (0, 1, 2)) == Fraction(3, 2)
        with pytest.raises(ValueError):
            induced_g_width(triangle, (0, 1, 2), "hw")


class TestFHTW:
    def test_triangle(self, triangle):
        result = fhtw(triangle)
        assert result.width == Fraction(3, 2) and result.method == "exact"
        assert validate_td(triangle, result.td)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_star_upper_bound(self, n):
        h = star_hypergraph(n)
        result = fhtw_exact(h)
        assert result.width <= 2 - Fraction(1, n)
        assert ordering_width(h, result.ordering) == result.width

    def test_greedy_never_beats_exact(self, triangle):
        for h in (triangle, star_hypergraph(3)):
            assert fhtw_greedy(h).width >= fhtw_exact(h).width

    def test_cap_falls_back_to_greedy(self):
        result = fhtw(star_hypergraph(3), FAQConfig(fhtw_exact_cap=2))
        assert result.method == "greedy"
        with pytest.raises(SizeLimitError):
            fhtw_exact(star_hypergraph(3), FAQConfig(fhtw_exact_cap=2))

    def test_product_vertices_skip_width(self, triangle):
        assert ordering_width(triangle, (0, 1, 2), product_vars={2}) == 1


class TestLStarAndComposition:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_star_l_star(self, n):
        assert l_star_size(star_hypergraph(n), range(n)) == n

    def test_l_star_trivial(self, triangle):
        assert l_star_size(triangle, ()) == 0
        assert l_star_size(triangle, (0, 1, 2)) == 0

    def test_identity_family(self):
        outer = Hypergraph(4, [("a", [0, 1]), ("b", [1, 2]), ("c", [0, 2]), ("d", [2, 3])])
        family = {eid: Hypergraph(4, [(0, members)], vertex_set=members) for eid, members in outer.edges.items()}
        composed = compose(outer, family)
        result = composed_width_bound(outer, family, composed)
        assert result.bound == Fraction(3, 2) + result.patch
        assert validate_td(composed, result.td)
        assert fhtw_exact(composed).width <= result.td_width <= result.bound

    def test_nested_chain_piece(self):
        outer = Hypergraph(3, [("a", [0, 1, 2])])
        family = {"a": Hypergraph(3, [(0, [0]), (1, [0, 1]), (2, [0, 1, 2])], vertex_set={0, 1, 2})}
        composed = compose(outer, family)
        result = composed_width_bound(outer, family, composed)
        assert result.patch == 0
        assert result.bound == 1
        assert validate_td(composed, result.td)
        assert result.td_width == 1

    @pytest.mark.parametrize("n", [4, 5])
    def test_star_of_stars(self, n):
        # outer edge i holds every hub a_j plus leaf b_i; its piece is a star centered at a_i
        hubs = set(range(n))
        outer = Hypergraph(2 * n, [(i, hubs | {n + i}) for i in range(n)])
        family = {i: Hypergraph(2 * n, [(j, [i, j]) for j in range(n) if j != i] + [(n, [i, n + i])],
                                vertex_set=hubs | {n + i})
                  for i in range(n)}
        composed = compose(outer, family)
        assert fhtw_exact(outer).width == 1
        assert all(fhtw_exact(piece).width == 1 for piece in family.values())
        # the hubs form a clique of binary edges
        assert fhtw_exact(composed).width == Fraction(n, 2)
        result = composed_width_bound(outer, family, composed)
        assert validate_td(composed, result.td)
        assert Fraction(n, 2) <= result.td_width <= result.bound

    @given(hypergraphs())
    @settings(max_examples=40, deadline=None)
    def test_bound_covers_the_decomposition(self, h):
        family = {eid: Hypergraph(h.vertex_count, [(0, members)], vertex_set=members)
                  for eid, members in h.edges.items()}
        composed = compose(h, family)
        result = composed_width_bound(h, family, composed)
        assert validate_td(composed, result.td)
        assert result.td_width <= result.bound

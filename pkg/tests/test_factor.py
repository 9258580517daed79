import pytest
from hypothesis import given, settings, strategies as st

from core.errors import FactorDataError, InvalidOrderingError
from core.factor import PLUS_INF, ListingFactor, SeekCounter
from core.semiring import semiring

NAT = semiring("nat")


@pytest.fixture
def sparse():
    return ListingFactor.build((0, 1), [((0, 1), 2), ((0, 3), 5), ((2, 0), 7), ((1, 1), 0)], NAT, "R")


class TestBuild:
    def test_zero_tuples_are_dropped(self, sparse):
        assert sparse.size == 3
        assert sparse.value_at((1, 1)) == 0

    def test_duplicate_key(self):
        with pytest.raises(FactorDataError):
            ListingFactor.build((0,), [((1,), 1), ((1,), 2)], NAT)

    def test_arity_mismatch(self):
        with pytest.raises(FactorDataError):
            ListingFactor.build((0, 1), [((1,), 1)], NAT)

    def test_repeated_variable(self):
        with pytest.raises(FactorDataError):
            ListingFactor.build((0, 0), [], NAT)

    def test_constant_fills_the_box(self):
        box = ListingFactor.constant((2, 0), (2, 3), 4, NAT)
        assert box.size == 6
        assert box.value_of({0: 2, 2: 1}) == 4

    def test_items_sorted(self, sparse):
        assert [key for key, _ in sparse.items()] == [(0, 1), (0, 3), (2, 0)]
        assert list(sparse) == sparse.items()


class TestTrieQueries:
    def test_successor_first_level(self, sparse):
        assert sparse.successor(()) == 0
        assert sparse.successor((), 0) == 2
        assert sparse.successor((), 2) == PLUS_INF

    def test_successor_under_prefix(self, sparse):
        assert sparse.successor((0,), 1) == 3
        assert sparse.successor((0,), 0) == 1
        assert sparse.successor((1,), -1) == PLUS_INF

    def test_prefix_too_long(self, sparse):
        with pytest.raises(InvalidOrderingError):
            sparse.node((0, 1))

    def test_seeks_are_counted_by_the_caller(self, sparse):
        counter = SeekCounter()
        assert sparse.value_at((0, 3), counter) == 5
        assert counter.count == 2
        sparse.successor((0,), 1, counter)
        assert counter.count == 4

    def test_absent_first_level_key_stops_early(self, sparse):
        counter = SeekCounter()
        assert sparse.value_at((5, 0), counter) == 0
        assert counter.count == 1

    def test_reads_leave_the_factor_untouched(self, sparse):
        state = dict(vars(sparse))
        sparse.value_at((0, 3))
        sparse.successor((2,))
        sparse.node((0,), SeekCounter())
        assert vars(sparse) == state
        assert sparse.items() == [((0, 1), 2), ((0, 3), 5), ((2, 0), 7)]

    def test_empty_order_factor(self):
        scalar = ListingFactor.build((), [((), 3)], NAT)
        assert scalar.value_at(()) == 3


class TestTransforms:
    def test_reorder_preserves_values(self, sparse):
        flipped = sparse.reorder((1, 0))
        assert flipped.value_at((3, 0)) == 5
        assert flipped == sparse
        assert sparse.reorder((0, 1)) is sparse

    def test_reorder_rejects_non_permutation(self, sparse):
        with pytest.raises(InvalidOrderingError):
            sparse.reorder((0, 2))

    def test_indicator_projection(self, sparse):
        proj = sparse.indicator_projection({0})
        assert proj.order == (0,)
        assert dict(proj.items()) == {(0,): 1, (2,): 1}

    def test_projection_onto_nothing(self, sparse):
        with pytest.raises(InvalidOrderingError):
            sparse.indicator_projection({5})

    def test_product_marginalize_full_domain(self):
        psi = ListingFactor.build((0, 1), [((0, 0), 2), ((0, 1), 3), ((1, 0), 5)], NAT)
        out, mults = psi.product_marginalize(1, 2)
        assert dict(out.items()) == {(0,): 6}
        assert mults == 1

    def test_product_marginalize_needs_last_variable(self, sparse):
        with pytest.raises(InvalidOrderingError):
            sparse.product_marginalize(0, 4)

    def test_map_values_drops_zeros(self, sparse):
        halved = sparse.map_values(lambda v: v // 3)
        assert dict(halved.items()) == {(0, 3): 1, (2, 0): 2}

    def test_idempotent_valued(self):
        ones = ListingFactor.constant((0,), (3,), 1, NAT)
        assert ones.is_idempotent_valued()
        assert not ListingFactor.build((0,), [((0,), 2)], NAT).is_idempotent_valued()


@st.composite
def tables(draw):
    rows = draw(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
                                st.integers(0, 4), max_size=30))
    return ListingFactor.build((0, 1, 2), list(rows.items()), NAT), rows


class TestProperties:
    @given(tables(), st.permutations([0, 1, 2]))
    @settings(max_examples=80, deadline=None)
    def test_reorder_is_a_relabelling(self, table, order):
        factor, rows = table
        moved = factor.reorder(order)
        for key, value in rows.items():
            assignment = dict(zip((0, 1, 2), key))
            assert moved.value_of(assignment) == value

    @given(tables())
    @settings(max_examples=80, deadline=None)
    def test_successor_walk_lists_first_level(self, table):
        factor, rows = table
        seen, x = [], float("-inf")
        while True:
            x = factor.successor((), x)
            if x == PLUS_INF:
                break
            seen.append(x)
        assert seen == sorted({k[0] for k, v in rows.items() if v != 0})

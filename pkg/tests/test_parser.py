from fractions import Fraction

import pytest

from core.engine import FAQEngine, brute_force_eval
from core.errors import FactorDataError, QuerySyntaxError, UnknownNameError
from core.parser import (format_hypergraph, format_query, load_query, parse_dimacs, parse_hypergraph,
                         parse_query, parse_query_text, parse_weights, read_factor_tsv)
from core.query import IDEMPOTENT

SUM_MAX = """\
# Σ_{x1} max_{x2} Σ_{x3} ψ12 ψ13
semiring nat
var x1 domain 0,1
var x2 domain 0,1
var x3 domain 0,1
free
agg x1 sum
agg x2 max
agg x3 sum
factor psi12(x1, x2) -
row psi12 0 0 1
row psi12 0 1 3
row psi12 1 0 2
factor psi13(x1,x3) -
row psi13 0 0 2
row psi13 0 1 1
row psi13 1 1 5
"""


class TestQueryDSL:
    def test_parse_and_evaluate(self):
        query = parse_query(SUM_MAX)
        assert query.names == ["x1", "x2", "x3"]
        assert query.aggregates == ["sum", "max", "sum"]
        assert dict(FAQEngine(query).eval().output.items()) == {(): 19}

    def test_free_variables_and_inferred_domains(self):
        query = parse_query("semiring bool\nvar a\nvar b\nfree a\nagg b or\n"
                            "factor E(a,b) -\nrow E x y true\nrow E y z true\n")
        assert query.f == 1
        assert query.domains == [["x", "y"], ["y", "z"]]
        result = FAQEngine(query).eval()
        assert result.rows(query) == [(("x",), "true"), (("y",), "true")]

    def test_tsv_factor_files(self, tmp_path):
        (tmp_path / "r.tsv").write_text("# a b value\n0\t1\t3/2\n1 1 -1\n")
        (tmp_path / "q.faq").write_text("semiring rat\nvar a\nvar b\nfree a\nagg b sum\nfactor R(a,b) r.tsv\n")
        query = load_query(tmp_path / "q.faq")
        assert dict(brute_force_eval(query).items()) == {(0,): Fraction(3, 2), (1,): Fraction(-1)}

    def test_idempotent_domain(self):
        text = ("semiring nat\nvar x domain 0,1\nvar y domain 0,1\nfree\nagg x prod\nagg y max\n"
                "idem {0,1}\nfactor R(x,y) -\nrow R 0 1 1\nrow R 1 0 1\n")
        query = parse_query(text)
        assert query.regime() == IDEMPOTENT

    @pytest.mark.parametrize("text, line, column", [
        ("var x\n", 1, 1),
        ("semiring nat\nsemiring rat\n", 2, 1),
        ("semiring nat\nvar x domain\n", 2, 7),
        ("semiring nat\nbogus x\n", 2, 1),
        ("semiring nat\nvar x\nfactor R[x] -\n", 3, 8),
        ("semiring nat\nrow R 0 1\n", 2, 5),
        ("semiring nat\nvar x\nvar x\n", 3, 5),
        ("semiring nat\nagg x\n", 2, 1),
    ])
    def test_syntax_errors_carry_position(self, text, line, column):
        with pytest.raises(QuerySyntaxError) as err:
            parse_query_text(text)
        assert (err.value.line, err.value.column) == (line, column)

    def test_name_errors(self):
        with pytest.raises(UnknownNameError):
            parse_query("semiring nat\nvar x\nfree y\n")
        with pytest.raises(UnknownNameError):
            parse_query("semiring nat\nvar x domain 0\nvar y domain 0\nfree x\n")
        with pytest.raises(UnknownNameError):
            parse_query("semiring nat\nvar x domain 0\nfree x\nagg x sum\n")
        with pytest.raises(UnknownNameError):
            parse_query("semiring nat\nvar x domain 0\nfree\nagg x avg\n")
        with pytest.raises(UnknownNameError):
            parse_query("semiring tropical\nvar x domain 0\nfree x\n")

    def test_data_errors(self, tmp_path):
        with pytest.raises(FactorDataError):
            parse_query("semiring nat\nvar x\nfree x\nfactor R(x) missing.tsv\n", tmp_path)
        with pytest.raises(FactorDataError):
            parse_query("semiring nat\nvar x\nfree x\nfactor R(x) -\nrow R 0 1 1\n")
        with pytest.raises(FactorDataError):
            parse_query("semiring nat\nvar x\nfree x\nfactor R(x) -\nrow R 0 -2\n")
        (tmp_path / "bad.tsv").write_text("0 1 2\n")
        with pytest.raises(FactorDataError):
            read_factor_tsv(tmp_path / "bad.tsv", 1)

    def test_format_round_trip(self):
        query = parse_query(SUM_MAX)
        again = parse_query(format_query(query))
        assert again.names == query.names and again.aggregates == query.aggregates
        assert brute_force_eval(again) == brute_force_eval(query)
        assert format_query(again) == format_query(query)


class TestHypergraphFiles:
    def test_parse(self):
        h = parse_hypergraph("n 3\ne R 1 2\ne S 2 3\ne T 1 3  # closes the triangle\n")
        assert h.edges == {"R": frozenset({0, 1}), "S": frozenset({1, 2}), "T": frozenset({0, 2})}
        assert parse_hypergraph(format_hypergraph(h)) == h

    @pytest.mark.parametrize("text", ["e R 1\n", "n 2\ne R 3\n", "n x\n", "n 2\nq\n", ""])
    def test_errors(self, text):
        with pytest.raises(QuerySyntaxError):
            parse_hypergraph(text)


class TestDimacs:
    def test_clauses_span_lines(self):
        cnf = parse_dimacs("c example\np cnf 3 2\n1 -2\n0 2 3 0\n")
        assert [sorted(c.literals) for c in cnf.clauses] == [[-2, 1], [2, 3]]

    def test_weights(self):
        weights = parse_weights("c weights\nw 1 1/2\n2 3\n")
        assert weights == {1: Fraction(1, 2), 2: Fraction(3)}
        cnf = parse_dimacs("p cnf 2 2\n1 0\n1 2 0\n", weights)
        assert [c.weight for c in cnf.clauses] == [Fraction(1, 2), Fraction(3)]

    def test_inline_weights(self):
        cnf = parse_dimacs("p cnf 1 1\n1 0\nw 1 2/3\n")
        assert cnf.clauses[0].weight == Fraction(2, 3)

    def test_weight_index_out_of_range(self):
        with pytest.raises(FactorDataError):
            parse_dimacs("p cnf 1 1\n1 0\n", {2: Fraction(1)})

    @pytest.mark.parametrize("text", ["1 0\n", "p cnf 2 1\n3 0\n", "p cnf 2 1\n1 x 0\n", "p dnf 2 1\n", ""])
    def test_errors(self, text):
        with pytest.raises(QuerySyntaxError):
            parse_dimacs(text)

    def test_header_mismatch_is_only_a_warning(self, caplog):
        cnf = parse_dimacs("p cnf 2 3\n1 0\n")
        assert len(cnf.clauses) == 1
        assert "declares 3 clauses" in caplog.text

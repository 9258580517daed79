"""
Parser - Query DSL, Factor Tables, Hypergraphs and DIMACS
Line-oriented formats; every syntax error reports line and column
"""
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
import logging
import re

from .errors import FactorDataError, QuerySyntaxError, UnknownNameError
from .hypergraph import Hypergraph
from .query import DOMAIN_FACTOR_PREFIX, Query
from .satsolver import WeightedCNF
from .semiring import Carrier, get_carrier

logger = logging.getLogger("faq.parser")

INLINE = "-"
_FACTOR_HEAD = re.compile(r"^(?P<name>[A-Za-z_][\w:.]*)\((?P<vars>[^)]*)\)$")


@dataclass
class FactorDecl:
    name: str
    variables: List[str]
    source: str                                   # path, or INLINE
    rows: List[Tuple[Tuple[str, ...], str]] = field(default_factory=list)
    line: int = 0


@dataclass
class QueryFile:
    semiring: str = ""
    variables: Dict[str, Optional[List[str]]] = field(default_factory=dict)   # name -> explicit domain
    free: List[str] = field(default_factory=list)
    aggregates: List[Tuple[str, str]] = field(default_factory=list)
    factors: List[FactorDecl] = field(default_factory=list)
    idempotent: Optional[List[str]] = None


def _tokens(line: str) -> List[Tuple[str, int]]:
    """Whitespace tokens with 1-based columns."""
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _split_list(text: str) -> List[str]:
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    return [part.strip() for part in body.split(",") if part.strip()]


def parse_query_text(text: str) -> QueryFile:
    qf = QueryFile()
    factors: Dict[str, FactorDecl] = {}
    declared_free = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = _tokens(line)
        keyword, column = tokens[0]
        args = tokens[1:]

        if keyword == "semiring":
            if len(args) != 1:
                raise QuerySyntaxError("expected `semiring <name>`", number, column)
            if qf.semiring:
                raise QuerySyntaxError("semiring declared twice", number, column)
            qf.semiring = args[0][0]
        elif keyword == "var":
            if not args:
                raise QuerySyntaxError("expected `var <name> [domain v1,v2,...]`", number, column)
            name, name_col = args[0]
            if name in qf.variables:
                raise QuerySyntaxError(f"variable {name} declared twice", number, name_col)
            domain = None
            if len(args) > 1:
                if args[1][0] != "domain" or len(args) < 3:
                    raise QuerySyntaxError("expected `domain v1,v2,...`", number, args[1][1])
                domain = _split_list("".join(tok for tok, _ in args[2:]))
                if not domain:
                    raise QuerySyntaxError(f"empty domain for {name}", number, args[2][1])
            qf.variables[name] = domain
        elif keyword == "free":
            if declared_free:
                raise QuerySyntaxError("free declared twice", number, column)
            declared_free = True
            qf.free = _split_list(",".join(tok for tok, _ in args))
        elif keyword == "agg":
            if len(args) != 2:
                raise QuerySyntaxError("expected `agg <name> <op>`", number, column)
            qf.aggregates.append((args[0][0], args[1][0]))
        elif keyword == "factor":
            if len(args) < 2:
                raise QuerySyntaxError("expected `factor <Name>(<vars>) <path>`", number, column)
            head = "".join(tok for tok, _ in args[:-1])
            match = _FACTOR_HEAD.match(head)
            if not match:
                raise QuerySyntaxError(f"malformed factor head {head!r}", number, args[0][1])
            name = match.group("name")
            if name in factors or name.startswith(DOMAIN_FACTOR_PREFIX):
                raise QuerySyntaxError(f"factor name {name} is taken", number, args[0][1])
            decl = FactorDecl(name, _split_list(match.group("vars")), args[-1][0], line=number)
            factors[name] = decl
            qf.factors.append(decl)
        elif keyword == "row":
            if len(args) < 2:
                raise QuerySyntaxError("expected `row <Factor> v1 ... value`", number, column)
            name, name_col = args[0]
            decl = factors.get(name)
            if decl is None or decl.source != INLINE:
                raise QuerySyntaxError(f"row for unknown inline factor {name}", number, name_col)
            values = [tok for tok, _ in args[1:]]
            decl.rows.append((tuple(values[:-1]), values[-1]))
        elif keyword == "idem":
            qf.idempotent = _split_list("".join(tok for tok, _ in args))
        else:
            raise QuerySyntaxError(f"unknown directive {keyword!r}", number, column)

    if not qf.semiring:
        raise QuerySyntaxError("missing `semiring` line", 1, 1)
    return qf


def read_factor_tsv(path: Union[str, Path], arity: int) -> List[Tuple[Tuple[str, ...], str]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FactorDataError(f"cannot read factor file {path}: {exc.strerror}") from exc
    rows = []
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cells = raw.split("\t") if "\t" in raw else raw.split()
        cells = [c.strip() for c in cells]
        if len(cells) != arity + 1:
            raise FactorDataError(f"{path}:{number}: expected {arity} keys and a value, got {len(cells)} columns")
        rows.append((tuple(cells[:-1]), cells[-1]))
    return rows


def build_query(qf: QueryFile, base_dir: Union[str, Path, None] = None) -> Query:
    """Resolve factor sources, check names and hand the tables to Query.from_tables."""
    carrier = get_carrier(qf.semiring)
    bound = [name for name, _ in qf.aggregates]
    for name in list(qf.free) + bound:
        if name not in qf.variables:
            raise UnknownNameError(f"undeclared variable {name}")
    overlap = set(qf.free) & set(bound)
    if overlap:
        raise UnknownNameError(f"variables both free and bound: {sorted(overlap)}")
    if len(set(bound)) != len(bound):
        raise UnknownNameError("a variable is aggregated twice")
    unplaced = set(qf.variables) - set(qf.free) - set(bound)
    if unplaced:
        raise UnknownNameError(f"variables neither free nor aggregated: {sorted(unplaced)}")

    base = Path(base_dir) if base_dir is not None else Path(".")
    tables = []
    for decl in qf.factors:
        for var in decl.variables:
            if var not in qf.variables:
                raise UnknownNameError(f"factor {decl.name} uses undeclared variable {var}")
        if decl.source == INLINE:
            rows = decl.rows
            for key, _ in rows:
                if len(key) != len(decl.variables):
                    raise FactorDataError(f"factor {decl.name}: row {key} has arity {len(key)}, "
                                          f"expected {len(decl.variables)}")
        else:
            rows = read_factor_tsv(base / decl.source, len(decl.variables))
        parsed = [(key, carrier.parse_source(value)) for key, value in rows]
        tables.append((decl.name, decl.variables, parsed))

    domains = {name: domain for name, domain in qf.variables.items() if domain is not None}
    idempotent = None
    if qf.idempotent is not None:
        idempotent = [carrier.parse(value) for value in qf.idempotent]
    query = Query.from_tables(carrier, qf.free, qf.aggregates, tables, domains, idempotent)
    logger.info("parsed query: %d variables, %d free, %d factors", query.n, query.f, len(qf.factors))
    return query


def parse_query(text: str, base_dir: Union[str, Path, None] = None) -> Query:
    return build_query(parse_query_text(text), base_dir)


def load_query(path: Union[str, Path]) -> Query:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FactorDataError(f"cannot read query file {path}: {exc.strerror}") from exc
    return parse_query(text, path.parent)


# ------------------------------------------------------------------ pretty-printing

def carrier_name(carrier: Carrier) -> str:
    return f"set:{carrier.universe}" if carrier.tag == "set" else carrier.tag


def format_query(query: Query) -> str:
    """The DSL text of `query`, with every factor inlined as `row` lines."""
    carrier = query.carrier
    lines = [f"semiring {carrier_name(carrier)}"]
    for v in range(query.n):
        domain = ",".join(str(label) for label in query.domains[v])
        lines.append(f"var {query.names[v]} domain {domain}")
    lines.append("free " + ",".join(query.names[v] for v in query.free_vars))
    for v in range(query.f, query.n):
        lines.append(f"agg {query.names[v]} {query.tag(v)}")
    if query.idempotent_domain != frozenset((carrier.zero, carrier.one)):
        values = sorted(carrier.format(value) for value in query.idempotent_domain)
        lines.append("idem {" + ",".join(values) + "}")
    for factor in query.factors:
        if factor.name.startswith(DOMAIN_FACTOR_PREFIX):
            continue
        names = ",".join(query.names[v] for v in factor.order)
        lines.append(f"factor {factor.name}({names}) {INLINE}")
        for key, value in factor:
            labels = " ".join(str(query.domains[v][x]) for v, x in zip(factor.order, key))
            lines.append(f"row {factor.name} {labels} {carrier.format(value)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ hypergraphs

def parse_hypergraph(text: str) -> Hypergraph:
    """`n <count>` then `e <name> v1 v2 ...` with vertices 1..n."""
    count = None
    edges: List[Tuple[str, List[int]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = _tokens(line)
        keyword, column = tokens[0]
        if keyword == "n":
            if len(tokens) != 2 or not tokens[1][0].isdigit():
                raise QuerySyntaxError("expected `n <count>`", number, column)
            count = int(tokens[1][0])
        elif keyword == "e":
            if count is None:
                raise QuerySyntaxError("`e` before `n`", number, column)
            if len(tokens) < 3:
                raise QuerySyntaxError("expected `e <name> v1 v2 ...`", number, column)
            members = []
            for token, col in tokens[2:]:
                if not token.isdigit() or not 1 <= int(token) <= count:
                    raise QuerySyntaxError(f"vertex {token!r} outside 1..{count}", number, col)
                members.append(int(token) - 1)
            edges.append((tokens[1][0], members))
        else:
            raise QuerySyntaxError(f"unknown directive {keyword!r}", number, column)
    if count is None:
        raise QuerySyntaxError("missing `n <count>` line", 1, 1)
    return Hypergraph(count, edges)


def format_hypergraph(hypergraph: Hypergraph) -> str:
    lines = [f"n {hypergraph.vertex_count}"]
    for eid, members in hypergraph.edges.items():
        lines.append(f"e {eid} " + " ".join(str(v + 1) for v in sorted(members)))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ DIMACS

def parse_weights(text: str) -> Dict[int, Fraction]:
    """`[w] <clause-index> <p/q>` per line, clause indices from 1."""
    weights: Dict[int, Fraction] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokens(raw)
        if not tokens or tokens[0][0] == "c":
            continue
        if tokens[0][0] == "w":
            tokens = tokens[1:]
        if len(tokens) != 2:
            raise QuerySyntaxError("expected `<clause-index> <weight>`", number, 1)
        try:
            weights[int(tokens[0][0])] = Fraction(tokens[1][0])
        except (ValueError, ZeroDivisionError):
            raise QuerySyntaxError(f"bad weight line {raw.strip()!r}", number, tokens[0][1])
    return weights


def parse_dimacs(text: str, weights: Optional[Dict[int, Fraction]] = None) -> WeightedCNF:
    variable_count = None
    declared_clauses = None
    clauses: List[List[int]] = []
    current: List[int] = []
    inline_weights: Dict[int, Fraction] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        tokens = _tokens(line)
        if tokens[0][0] == "p":
            if len(tokens) != 4 or tokens[1][0] != "cnf":
                raise QuerySyntaxError("expected `p cnf <vars> <clauses>`", number, 1)
            variable_count, declared_clauses = int(tokens[2][0]), int(tokens[3][0])
            continue
        if tokens[0][0] == "w":
            inline_weights.update(parse_weights(line))
            continue
        if variable_count is None:
            raise QuerySyntaxError("clause before the `p cnf` header", number, 1)
        for token, column in tokens:
            try:
                literal = int(token)
            except ValueError:
                raise QuerySyntaxError(f"not a literal: {token!r}", number, column)
            if abs(literal) > variable_count:
                raise QuerySyntaxError(f"literal {literal} outside 1..{variable_count}", number, column)
            if literal == 0:
                clauses.append(current)
                current = []
            else:
                current.append(literal)
    if current:
        clauses.append(current)
    if variable_count is None:
        raise QuerySyntaxError("missing `p cnf` header", 1, 1)
    if declared_clauses is not None and declared_clauses != len(clauses):
        logger.warning("header declares %d clauses, found %d", declared_clauses, len(clauses))
    merged = dict(inline_weights)
    merged.update(weights or {})
    for index in merged:
        if not 1 <= index <= len(clauses):
            raise FactorDataError(f"weight for clause {index} outside 1..{len(clauses)}")
    return WeightedCNF.from_lists(variable_count, clauses,
                                  [merged.get(i + 1, Fraction(0)) for i in range(len(clauses))])

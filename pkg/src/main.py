#!/usr/bin/env python3
"""
FAQ Engine - Main CLI
Run: python main.py eval query.faq --mode listing --plan
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Add src to path for imports
sys.path.append(str(Path(__file__).parent))

from core.config import FAQConfig
from core.engine import COUNT, DIRECT, ENUMERATE, FACTORIZED, LISTING, FAQEngine, brute_force_eval
from core.errors import FactorDataError, FAQError, UnknownNameError
from core.evo import choose_ordering, evo_contains, expression_tree, linear_extensions, precedence_poset
from core.hypergraph import Hypergraph, is_alpha_acyclic, is_beta_acyclic
from core.parser import load_query, parse_dimacs, parse_hypergraph, parse_weights
from core.query import Query
from core.satsolver import brute_force_count, count_beta_acyclic, sat_beta_acyclic
from core.width import fhtw, gyo_join_tree, ordering_width, td_from_ordering, validate_td

logger = logging.getLogger("faq.cli")


class CLIParser(argparse.ArgumentParser):
    """Usage errors are user errors: exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ Error: {message}", file=sys.stderr)
        sys.exit(1)


def banner(title: str, quiet: bool, **facts) -> None:
    if quiet:
        return
    print(f"\n🧮 {title}", file=sys.stderr)
    print("═" * 60, file=sys.stderr)
    if facts:
        print("   ".join(f"• {k}: {v}" for k, v in facts.items()), file=sys.stderr)
        print("═" * 60, file=sys.stderr)


def emit(payload: Any) -> None:
    print(json.dumps(payload, ensure_ascii=False))


def fmt_width(width) -> str:
    if isinstance(width, float) and width == float("inf"):
        return "inf"
    return str(Fraction(width)) if isinstance(width, (int, Fraction)) else str(width)


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FactorDataError(f"cannot read {path}: {exc.strerror}") from exc


def load_structure(path: str) -> Tuple[Hypergraph, List[str], Optional[Query]]:
    """A `.hg` hypergraph (vertices shown 1..n) or a query file (vertices shown by name)."""
    if path.endswith(".hg"):
        hypergraph = parse_hypergraph(read_text(path))
        return hypergraph, [str(v + 1) for v in range(hypergraph.vertex_count)], None
    query = load_query(path)
    return query.hypergraph, list(query.names), query


def parse_order(query: Query, text: str) -> Tuple[int, ...]:
    """Comma-separated variable names, or 1-based positions in the written order."""
    order = []
    for part in text.split(","):
        part = part.strip()
        if part in query.names:
            order.append(query.vertex(part))
        elif part.isdigit() and 1 <= int(part) <= query.n:
            order.append(int(part) - 1)
        else:
            raise UnknownNameError(f"unknown variable in ordering: {part!r}")
    return tuple(order)


def tsv(rows: Sequence[Tuple[Tuple[Any, ...], str]]) -> str:
    return "\n".join("\t".join([str(label) for label in key] + [value]) for key, value in rows)


# ------------------------------------------------------------------ commands

def cmd_eval(args, config: FAQConfig) -> int:
    query = load_query(args.query)
    banner("FAQ EVALUATION", args.quiet, Semiring=query.carrier.tag, Variables=query.n, Free=query.f,
           Factors=len(query.factors))
    engine = FAQEngine(query, config, use_projections=not args.no_projections)
    ordering = parse_order(query, args.order) if args.order else args.strategy

    if args.mode == ENUMERATE:
        order = ordering if not isinstance(ordering, str) else choose_ordering(query, config).ordering
        rows = []
        for key, value in engine.enumerate_output(order):
            labels = [None] * query.f
            for v, x in zip(order[:query.f], key):
                labels[v] = query.domains[v][x]
            rows.append((tuple(labels), query.carrier.format(value)))
        if args.json:
            emit({"rows": [list(key) + [value] for key, value in rows]})
        elif rows:
            print(tsv(rows))
        return 0

    result = engine.eval(ordering, args.output_phase, checked=not args.unchecked_order, with_agm=args.plan)
    rows = result.rows(query)
    payload: Dict[str, Any] = {}
    if args.mode == COUNT:
        payload["count"] = len(rows)
    else:
        payload["rows"] = [list(key) + [value] for key, value in rows]
    if args.plan:
        payload["plan"] = result.plan(query)
    if args.json or args.plan or args.mode == COUNT:
        emit(payload)
    elif rows:
        print(tsv(rows))
    if not args.quiet:
        print(f"✅ {len(rows)} output tuples │ faqw {fmt_width(result.faqw)} │ "
              f"seeks {result.stats.seeks}", file=sys.stderr)
    return 0


def cmd_oracle(args, config: FAQConfig) -> int:
    query = load_query(args.query)
    banner("BRUTE-FORCE ORACLE", args.quiet, Variables=query.n)
    output = brute_force_eval(query, config)
    rows = [(tuple(query.domains[v][x] for v, x in zip(output.order, key)), query.carrier.format(value))
            for key, value in output]
    if args.json:
        emit({"rows": [list(key) + [value] for key, value in rows]})
    elif rows:
        print(tsv(rows))
    return 0


def cmd_width(args, config: FAQConfig) -> int:
    hypergraph, labels, _ = load_structure(args.input)
    banner("FRACTIONAL HYPERTREE WIDTH", args.quiet, Vertices=len(hypergraph.vertex_set),
           Edges=len(hypergraph.edges))
    result = fhtw(hypergraph, config)
    emit({
        "fhtw": fmt_width(result.width),
        "ordering": [labels[v] for v in result.ordering],
        "bags": [[labels[v] for v in bag] for bag in result.td.bag_list()],
        "method": result.method,
    })
    return 0


def cmd_order(args, config: FAQConfig) -> int:
    query = load_query(args.query)
    banner("EXPRESSION TREE & ORDERING", args.quiet, Variables=query.n, Regime=query.regime())
    tree = expression_tree(query)
    poset = precedence_poset(query, tree)
    extensions = linear_extensions(poset, config.linex_limit, config)
    choice = choose_ordering(query, config)
    names = query.names
    emit({
        "tree": tree.render(names),
        "hasse": [[names[u], names[v]] for u, v in poset.hasse_edges()],
        "linex": (f">= {len(extensions.orderings)}" if extensions.truncated else len(extensions.orderings)),
        "ordering": [names[v] for v in choice.ordering],
        "faqw": fmt_width(choice.width),
        "method": choice.method,
    })
    return 0


def cmd_evo_check(args, config: FAQConfig) -> int:
    query = load_query(args.query)
    order = parse_order(query, args.order)
    emit({"in_evo": evo_contains(query, order)})
    return 0


def cmd_acyclic(args, config: FAQConfig) -> int:
    hypergraph, labels, _ = load_structure(args.input)
    alpha, gyo = is_alpha_acyclic(hypergraph)
    beta, neo = is_beta_acyclic(hypergraph)
    payload: Dict[str, Any] = {"alpha": alpha, "beta": beta}
    if alpha:
        payload["gyo_ordering"] = [labels[v] for v in gyo]
        join_tree = gyo_join_tree(hypergraph)
        if join_tree is not None:
            payload["join_tree"] = [[labels[v] for v in bag] for bag in join_tree.bag_list()]
    if beta:
        payload["neo"] = [labels[v] for v in neo]
    emit(payload)
    return 0


def cmd_td(args, config: FAQConfig) -> int:
    hypergraph, labels, query = load_structure(args.input)
    if args.order:
        if query is not None:
            order = parse_order(query, args.order)
        else:
            order = tuple(int(part) - 1 for part in args.order.split(","))
    else:
        order = fhtw(hypergraph, config).ordering
    td = td_from_ordering(hypergraph, order)
    report = validate_td(hypergraph, td)
    td = td.relabel()
    emit({
        "ordering": [labels[v] for v in order],
        "bags": [[labels[v] for v in sorted(td.bags[node])] for node in td.nodes()],
        "edges": [list(edge) for edge in sorted(td.tree.edges)],
        "width": fmt_width(ordering_width(hypergraph, order)),
        "valid": report.valid,
    })
    return 0


def cmd_sat(args, config: FAQConfig) -> int:
    weights = parse_weights(read_text(args.weights)) if args.weights else None
    cnf = parse_dimacs(read_text(args.cnf), weights)
    banner("β-ACYCLIC SAT", args.quiet, Variables=cnf.variable_count, Clauses=len(cnf.clauses))
    if args.count:
        count = brute_force_count(cnf, config) if args.brute else count_beta_acyclic(cnf)
        emit({"count": str(count)})
    else:
        if args.brute:
            satisfiable = brute_force_count(cnf.as_hard(), config) > 0
        else:
            satisfiable = sat_beta_acyclic(cnf)
        emit({"sat": satisfiable})
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "width": cmd_width,
    "order": cmd_order,
    "evo-check": cmd_evo_check,
    "acyclic": cmd_acyclic,
    "td": cmd_td,
    "sat": cmd_sat,
}


def build_parser() -> argparse.ArgumentParser:
    parser = CLIParser(prog="faq", description="Functional aggregate query engine")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default from FAQ_LOG_LEVEL)")
    parser.add_argument("--quiet", action="store_true", help="No banners on stderr")
    parser.add_argument("--linex-limit", type=int, help="Cap on enumerated linear extensions")
    parser.add_argument("--brute-force-limit", type=int, help="Cap on the oracle's assignment space")
    parser.add_argument("--fhtw-exact-cap", type=int, help="Max vertices for exact fhtw")
    parser.add_argument("--lp-variable-cap", type=int, help="Max LP columns")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CLIParser)

    p = sub.add_parser("eval", help="Evaluate a query with InsideOut")
    p.add_argument("query")
    p.add_argument("--order", help="Pin the ordering: names or 1-based positions, comma separated")
    p.add_argument("--strategy", choices=["auto", "approx"], default="auto")
    p.add_argument("--mode", choices=[LISTING, COUNT, ENUMERATE], default=LISTING)
    p.add_argument("--output-phase", choices=[FACTORIZED, DIRECT], default=FACTORIZED)
    p.add_argument("--plan", action="store_true", help="Include the plan report")
    p.add_argument("--json", action="store_true")
    p.add_argument("--unchecked-order", action="store_true", help="Skip the EVO membership check")
    p.add_argument("--no-projections", action="store_true", help="Disable indicator projections")

    p = sub.add_parser("oracle", help="Evaluate a query by brute force")
    p.add_argument("query")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("width", help="Fractional hypertree width of a hypergraph or query")
    p.add_argument("input")

    p = sub.add_parser("order", help="Expression tree, precedence poset and chosen ordering")
    p.add_argument("query")

    p = sub.add_parser("evo-check", help="Is an ordering equivalent to the written expression?")
    p.add_argument("query")
    p.add_argument("--order", required=True)

    p = sub.add_parser("acyclic", help="α- and β-acyclicity")
    p.add_argument("input")

    p = sub.add_parser("td", help="Tree decomposition from an ordering")
    p.add_argument("input")
    p.add_argument("--order")

    p = sub.add_parser("sat", help="SAT / weighted #SAT on β-acyclic CNF")
    p.add_argument("cnf")
    p.add_argument("--count", action="store_true")
    p.add_argument("--weights", help="Weight file: `<clause-index> <p/q>` per line")
    p.add_argument("--brute", action="store_true", help="Use the exhaustive oracle")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = FAQConfig.from_env(dotenv=False).override(
        linex_limit=args.linex_limit, brute_force_limit=args.brute_force_limit,
        fhtw_exact_cap=args.fhtw_exact_cap, lp_variable_cap=args.lp_variable_cap,
        log_level=args.log_level.upper() if args.log_level else None)
    logging.basicConfig(format="[%(levelname)s] %(name)s: %(message)s", level=config.log_level)

    try:
        return COMMANDS[args.command](args, config)
    except FAQError as exc:
        print(f"❌ Error: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("\n⏸️ Interrupted by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())

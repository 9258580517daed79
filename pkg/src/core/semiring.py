"""
Semiring - Carriers, Aggregates and Value Operations
Commutative semirings over a fixed carrier, plus the lift/lower maps that turn
AVG, UNIQUE and max-times aggregation into semiring computations
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple
import logging

from .errors import CarrierMismatchError, FactorDataError, UnknownNameError, UnknownReductionError

logger = logging.getLogger("faq.semiring")

PRODUCT = "prod"
INF = float("inf")

# Reduction kinds (non-semiring aggregates carried over a lifted semiring)
AVG = "avg"
UNIQUE = "unique"
MAXTIMES = "maxtimes"
REDUCTIONS = (AVG, UNIQUE, MAXTIMES)


@dataclass(frozen=True)
class SemiringValue:
    """A payload tagged with the carrier it belongs to."""
    tag: str
    payload: Any


# ------------------------------------------------------------------ payload ops

def _and(a, b):
    return a and b


def _or(a, b):
    return a or b


def _mul(a, b):
    return a * b


def _add(a, b):
    return a + b


def _max(a, b):
    return a if a >= b else b


def _min(a, b):
    return a if a <= b else b


def _avg_plus(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _avg_times(a, b):
    return (a[0] * b[0], a[1] * b[1])


def _unique_plus(a, b):
    return min(a + b, 2)


def _unique_times(a, b):
    return min(a * b, 2)


def _interval_plus(a, b):
    # None is the NaN pair
    if a is None:
        return b
    if b is None:
        return a
    return (min(a[0], b[0]), max(a[1], b[1]))


def _interval_times(a, b):
    if a is None or b is None:
        return None
    products = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(products), max(products))


# ------------------------------------------------------------------ literals

def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "t", "1"):
        return True
    if lowered in ("false", "f", "0"):
        return False
    raise FactorDataError(f"not a boolean literal: {text!r}")


def _parse_nat(text: str) -> int:
    value = int(text.strip())
    if value < 0:
        raise FactorDataError(f"negative natural: {text!r}")
    return value


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise FactorDataError(f"not a rational literal: {text!r}") from exc


def _parse_nonnegative(text: str) -> Fraction:
    value = _parse_rational(text)
    if value < 0:
        raise FactorDataError(f"negative value on a nonnegative carrier: {text!r}")
    return value


def _parse_minplus(text: str):
    if text.strip().lower() in ("inf", "+inf"):
        return INF
    return _parse_rational(text)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.strip().replace("i", "j").replace(" ", ""))
    except ValueError as exc:
        raise FactorDataError(f"not a complex literal: {text!r}") from exc


def _parse_extended_real(text: str) -> Optional[Fraction]:
    if text.strip().lower() == "nan":
        return None
    return _parse_rational(text)


def _format_bool(value: bool) -> str:
    return "true" if value else "false"


def _format_complex(value: complex) -> str:
    return f"{value.real!r}{value.imag:+}i"


def _format_number(value) -> str:
    if value == INF:
        return "inf"
    return str(value)


def _format_extended_real(value) -> str:
    return "nan" if value is None else str(value)


# ------------------------------------------------------------------ carriers

class Carrier:
    """
    One carrier domain: a single ⊗ with its identity, a shared 𝟎, and the named
    aggregates that form a commutative semiring with ⊗.
    """

    def __init__(self, tag: str, times: Callable, one: Any, zero: Any,
                 aggregates: Dict[str, Callable], parse: Callable[[str], Any],
                 format_value: Callable[[Any], str],
                 product_aliases: Tuple[str, ...] = (PRODUCT,),
                 default_aggregate: Optional[str] = None,
                 universe: int = 0,
                 reduction: Optional[str] = None):
        self.tag = tag
        self.times = times
        self.one = one
        self.zero = zero
        self.aggregates = aggregates
        self.parse_source = parse
        self.format_source = format_value
        self.product_aliases = product_aliases
        self.default_aggregate = default_aggregate or next(iter(aggregates))
        self.universe = universe
        self.reduction = reduction

    def parse(self, text: str) -> Any:
        """Parse a factor-file literal into a payload (lifted for reduction carriers)."""
        source = self.parse_source(text)
        if self.reduction is not None:
            return lift_payload(self.reduction, source)
        return source

    def format(self, payload: Any) -> str:
        if self.reduction is not None:
            return self.format_source(lower_payload(self.reduction, payload))
        return self.format_source(payload)

    def canonical_aggregate(self, name: str) -> str:
        """Map a DSL aggregate name to an aggregate id or PRODUCT."""
        if name in self.product_aliases:
            return PRODUCT
        if name in self.aggregates:
            return name
        raise UnknownNameError(f"aggregate {name!r} is not defined over carrier {self.tag}")

    def __repr__(self) -> str:
        return f"Carrier({self.tag})"


def _bitset_parser(universe: int) -> Callable[[str], int]:
    def parse(text: str) -> int:
        body = text.strip().strip("{}")
        mask = 0
        for part in body.split(","):
            if part.strip() == "":
                continue
            element = int(part)
            if element < 0 or element >= universe:
                raise FactorDataError(f"set element {element} outside universe {universe}")
            mask |= 1 << element
        return mask
    return parse


def _bitset_format(mask: int) -> str:
    elements = []
    index = 0
    while mask:
        if mask & 1:
            elements.append(str(index))
        mask >>= 1
        index += 1
    return "{" + ",".join(elements) + "}"


CARRIER_NAMES = ("bool", "nat", "rat", "f64", "complex", "maxprod", "minplus",
                 "set", "avg", "unique", "maxtimes")


def get_carrier(name: str) -> Carrier:
    """Build a carrier from its DSL name (`set:<u>` carries its universe size)."""
    if name == "bool":
        return Carrier("bool", _and, True, False, {"or": _or}, _parse_bool, _format_bool,
                       product_aliases=(PRODUCT, "and"))
    if name == "nat":
        return Carrier("nat", _mul, 1, 0, {"sum": _add, "max": _max}, _parse_nat, _format_number)
    if name == "rat":
        return Carrier("rat", _mul, Fraction(1), Fraction(0), {"sum": _add}, _parse_rational,
                       _format_number)
    if name == "f64":
        return Carrier("f64", _mul, 1.0, 0.0, {"sum": _add}, float, repr)
    if name == "complex":
        return Carrier("complex", _mul, complex(1), complex(0), {"sum": _add}, _parse_complex,
                       _format_complex)
    if name == "maxprod":
        return Carrier("maxprod", _mul, Fraction(1), Fraction(0), {"max": _max, "sum": _add},
                       _parse_nonnegative, _format_number)
    if name == "minplus":
        return Carrier("minplus", _add, Fraction(0), INF, {"min": _min}, _parse_minplus,
                       _format_number)
    if name.startswith("set:"):
        universe = int(name.split(":", 1)[1])
        if universe < 1:
            raise UnknownNameError(f"set universe must be positive: {name}")
        return Carrier("set", lambda a, b: a & b, (1 << universe) - 1, 0,
                       {"union": lambda a, b: a | b}, _bitset_parser(universe), _bitset_format,
                       product_aliases=(PRODUCT, "intersect"), universe=universe)
    if name == AVG:
        return Carrier(AVG, _avg_times, (Fraction(1), 1), (Fraction(0), 0), {AVG: _avg_plus},
                       _parse_rational, _format_number, reduction=AVG)
    if name == UNIQUE:
        return Carrier(UNIQUE, _unique_times, 1, 0, {UNIQUE: _unique_plus}, _parse_bool,
                       _format_bool, reduction=UNIQUE)
    if name == MAXTIMES:
        return Carrier(MAXTIMES, _interval_times, (Fraction(1), Fraction(1)), None,
                       {"max": _interval_plus}, _parse_extended_real, _format_extended_real,
                       reduction=MAXTIMES)
    raise UnknownNameError(f"unknown semiring: {name}")


class SemiringSpec:
    """
    A commutative semiring (carrier, ⊕, ⊗, 𝟎, 𝟏). Payload-level methods are used by
    factors and the engine; the module-level functions work on tagged values.
    """

    def __init__(self, carrier: Carrier, plus_name: Optional[str] = None):
        self.carrier = carrier
        self.plus_name = plus_name or carrier.default_aggregate
        if self.plus_name not in carrier.aggregates:
            raise UnknownNameError(f"{self.plus_name!r} does not form a semiring over {carrier.tag}")
        self.add = carrier.aggregates[self.plus_name]
        self.mul = carrier.times
        self.zero = carrier.zero
        self.one = carrier.one

    @property
    def tag(self) -> str:
        return self.carrier.tag

    def with_plus(self, plus_name: str) -> "SemiringSpec":
        return SemiringSpec(self.carrier, plus_name)

    def is_zero(self, payload: Any) -> bool:
        return payload == self.zero

    def is_idempotent(self, payload: Any) -> bool:
        return self.mul(payload, payload) == payload

    def power(self, payload: Any, k: int) -> Tuple[Any, int]:
        """Repeated squaring; returns (a^⊗k, multiplications used)."""
        if k < 1:
            raise ValueError(f"power needs k >= 1, got {k}")
        if self.is_idempotent(payload):
            return payload, 0
        result = None
        base = payload
        mults = 0
        while k:
            if k & 1:
                if result is None:
                    result = base
                else:
                    result = self.mul(result, base)
                    mults += 1
            k >>= 1
            if k:
                base = self.mul(base, base)
                mults += 1
        return result, mults

    def sum(self, payloads: Iterable[Any]) -> Any:
        total = self.zero
        for p in payloads:
            total = self.add(total, p)
        return total

    def product(self, payloads: Iterable[Any]) -> Any:
        total = self.one
        for p in payloads:
            total = self.mul(total, p)
        return total

    def __eq__(self, other) -> bool:
        return (isinstance(other, SemiringSpec) and other.tag == self.tag
                and other.plus_name == self.plus_name and other.carrier.universe == self.carrier.universe)

    def __hash__(self) -> int:
        return hash((self.tag, self.plus_name, self.carrier.universe))

    def __repr__(self) -> str:
        return f"SemiringSpec({self.tag}, {self.plus_name})"


def semiring(name: str, plus_name: Optional[str] = None) -> SemiringSpec:
    return SemiringSpec(get_carrier(name), plus_name)


# ------------------------------------------------------------------ tagged API

def _check(spec: SemiringSpec, *values: SemiringValue) -> None:
    for value in values:
        if value.tag != spec.tag:
            raise CarrierMismatchError(f"value tagged {value.tag} used with carrier {spec.tag}")


def wrap(spec: SemiringSpec, payload: Any) -> SemiringValue:
    return SemiringValue(spec.tag, payload)


def plus(spec: SemiringSpec, a: SemiringValue, b: SemiringValue) -> SemiringValue:
    _check(spec, a, b)
    return SemiringValue(spec.tag, spec.add(a.payload, b.payload))


def times(spec: SemiringSpec, a: SemiringValue, b: SemiringValue) -> SemiringValue:
    _check(spec, a, b)
    return SemiringValue(spec.tag, spec.mul(a.payload, b.payload))


def power(spec: SemiringSpec, a: SemiringValue, k: int) -> SemiringValue:
    _check(spec, a)
    value, _ = spec.power(a.payload, k)
    return SemiringValue(spec.tag, value)


def power_with_count(spec: SemiringSpec, a: SemiringValue, k: int) -> Tuple[SemiringValue, int]:
    _check(spec, a)
    value, mults = spec.power(a.payload, k)
    return SemiringValue(spec.tag, value), mults


def is_idempotent(spec: SemiringSpec, a: SemiringValue) -> bool:
    _check(spec, a)
    return spec.is_idempotent(a.payload)


# ------------------------------------------------------------------ reductions

# source carrier tag per reduction kind
SOURCE_TAGS = {AVG: "rat", UNIQUE: "bool", MAXTIMES: "rat"}


def lift_payload(kind: str, x: Any) -> Any:
    if kind == AVG:
        x = Fraction(x)
        return (x, 1 if x != 0 else 0)
    if kind == UNIQUE:
        return 1 if x else 0
    if kind == MAXTIMES:
        return None if x is None else (Fraction(x), Fraction(x))
    raise UnknownReductionError(f"unknown reduction: {kind}")


def lower_payload(kind: str, v: Any) -> Any:
    if kind == AVG:
        total, count = v
        return Fraction(0) if count == 0 else Fraction(total) / count
    if kind == UNIQUE:
        return v == 1
    if kind == MAXTIMES:
        return None if v is None else v[1]
    raise UnknownReductionError(f"unknown reduction: {kind}")


def lift(kind: str, x: SemiringValue) -> SemiringValue:
    """f̄: source carrier -> lifted semiring."""
    if kind not in REDUCTIONS:
        raise UnknownReductionError(f"unknown reduction: {kind}")
    if x.tag != SOURCE_TAGS[kind]:
        raise CarrierMismatchError(f"{kind} lifts {SOURCE_TAGS[kind]} values, got {x.tag}")
    return SemiringValue(kind, lift_payload(kind, x.payload))


def lower(kind: str, v: SemiringValue) -> SemiringValue:
    """f: lifted semiring -> source carrier. For MAXTIMES only valid once all ⊗ are done."""
    if kind not in REDUCTIONS:
        raise UnknownReductionError(f"unknown reduction: {kind}")
    if v.tag != kind:
        raise CarrierMismatchError(f"{kind} lowers {kind} values, got {v.tag}")
    return SemiringValue(SOURCE_TAGS[kind], lower_payload(kind, v.payload))


def direct_aggregate(kind: str, values: List[Any]) -> Any:
    """The n-ary aggregate on source payloads, computed without lifting."""
    if kind == AVG:
        nonzero = [Fraction(v) for v in values if v != 0]
        return Fraction(0) if not nonzero else sum(nonzero) / len(nonzero)
    if kind == UNIQUE:
        return sum(1 for v in values if v) == 1
    if kind == MAXTIMES:
        present = [v for v in values if v is not None]
        return max(present) if present else None
    raise UnknownReductionError(f"unknown reduction: {kind}")

"""
Factor - Listing Representation
Non-zero tuples in a per-level sorted trie: successor and value queries,
indicator projections, product marginalization and re-keying
"""
from bisect import bisect_right
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple
import logging

from .errors import FactorDataError, InvalidOrderingError
from .semiring import SemiringSpec

logger = logging.getLogger("faq.factor")

Key = Tuple[int, ...]

# SENTINELS
MINUS_INF = float("-inf")
PLUS_INF = float("inf")


@dataclass
class SeekCounter:
    """Trie steps spent by the reads that were handed this counter."""
    count: int = 0

    def add(self, steps: int = 1) -> None:
        self.count += steps


class TrieNode:
    """Sorted child keys; inner nodes hold TrieNodes, the last level holds payloads."""

    __slots__ = ("keys", "children")

    def __init__(self):
        self.keys: List[int] = []
        self.children: List[Any] = []

    def child(self, key: int) -> Optional[Any]:
        index = bisect_right(self.keys, key) - 1
        if index >= 0 and self.keys[index] == key:
            return self.children[index]
        return None


def _build_trie(entries: Sequence[Tuple[Key, Any]], depth: int) -> TrieNode:
    root = TrieNode()
    for key, value in entries:               # entries are sorted
        node = root
        for level in range(depth):
            part = key[level]
            last = level == depth - 1
            if not node.keys or node.keys[-1] != part:
                node.keys.append(part)
                node.children.append(value if last else TrieNode())
            if not last:
                node = node.children[-1]
    return root


class ListingFactor:
    """
    ψ_S as a table of its non-𝟎 tuples. `order` is the trie key order over the
    support; keys are domain ordinals.
    """

    def __init__(self, order: Sequence[int], semiring: SemiringSpec,
                 entries: Dict[Key, Any], name: str = ""):
        self.order: Tuple[int, ...] = tuple(order)
        self.semiring = semiring
        self.name = name
        self._entries = entries
        self._sorted = sorted(entries.items())
        self.root = _build_trie(self._sorted, len(self.order))

    @classmethod
    def build(cls, order: Sequence[int], tuples: Iterable[Tuple[Sequence[int], Any]],
              semiring: SemiringSpec, name: str = "") -> "ListingFactor":
        order = tuple(order)
        if len(set(order)) != len(order):
            raise FactorDataError(f"factor {name or '?'}: repeated variable in {list(order)}")
        entries: Dict[Key, Any] = {}
        for key, value in tuples:
            key = tuple(key)
            if len(key) != len(order):
                raise FactorDataError(f"factor {name or '?'}: key {key} has arity {len(key)}, expected {len(order)}")
            if key in entries:
                raise FactorDataError(f"factor {name or '?'}: duplicate key {key}")
            entries[key] = value
        return cls(order, semiring, {k: v for k, v in entries.items() if not semiring.is_zero(v)}, name)

    @classmethod
    def constant(cls, order: Sequence[int], domain_sizes: Sequence[int], value: Any,
                 semiring: SemiringSpec, name: str = "") -> "ListingFactor":
        """The factor equal to `value` on the whole box of `domain_sizes`."""
        keys: List[Key] = [()]
        for size in domain_sizes:
            keys = [k + (x,) for k in keys for x in range(size)]
        return cls.build(order, [(k, value) for k in keys], semiring, name)

    # ------------------------------------------------------------------ queries

    @property
    def size(self) -> int:
        return len(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def support(self) -> frozenset:
        return frozenset(self.order)

    def items(self) -> List[Tuple[Key, Any]]:
        """Stored tuples in trie (lexicographic) order."""
        return list(self._sorted)

    def node(self, prefix: Sequence[int], counter: Optional[SeekCounter] = None) -> Optional[TrieNode]:
        """Conditional factor ψ(·|prefix) as a trie node, or None if it is ≡ 𝟎."""
        if len(prefix) >= len(self.order):
            raise InvalidOrderingError(f"prefix {tuple(prefix)} too long for {self.order}")
        node = self.root
        for part in prefix:
            if counter is not None:
                counter.add()
            node = node.child(part)
            if node is None:
                return None
        return node

    def successor(self, prefix: Sequence[int], y: float = MINUS_INF,
                  counter: Optional[SeekCounter] = None) -> float:
        """Least x_{k+1} > y with ψ(·|prefix, x_{k+1}) ≢ 𝟎, else PLUS_INF."""
        node = self.node(prefix, counter)
        if node is None:
            return PLUS_INF
        if counter is not None:
            counter.add()
        index = bisect_right(node.keys, y)
        return node.keys[index] if index < len(node.keys) else PLUS_INF

    def value_at(self, key: Sequence[int], counter: Optional[SeekCounter] = None) -> Any:
        key = tuple(key)
        if len(key) != len(self.order):
            raise FactorDataError(f"value query {key} has arity {len(key)}, expected {len(self.order)}")
        if not key:
            return self._entries.get((), self.semiring.zero)
        node = self.node(key[:-1], counter)
        if node is None:
            return self.semiring.zero
        if counter is not None:
            counter.add()
        value = node.child(key[-1])
        return self.semiring.zero if value is None else value

    def value_of(self, assignment: Dict[int, int]) -> Any:
        """Value under a variable -> ordinal assignment covering the support."""
        return self.value_at(tuple(assignment[v] for v in self.order))

    # ------------------------------------------------------------------ transforms

    def reorder(self, new_order: Sequence[int]) -> "ListingFactor":
        new_order = tuple(new_order)
        if sorted(new_order) != sorted(self.order):
            raise InvalidOrderingError(f"{list(new_order)} is not a permutation of {list(self.order)}")
        if new_order == self.order:
            return self
        position = [self.order.index(v) for v in new_order]
        entries = {tuple(key[p] for p in position): value for key, value in self._entries.items()}
        return ListingFactor(new_order, self.semiring, entries, self.name)

    def indicator_projection(self, onto: Iterable[int]) -> "ListingFactor":
        """ψ_{S/T}: 𝟏 on every key of S∩T that extends to a stored tuple."""
        onto = frozenset(onto)
        kept = [i for i, v in enumerate(self.order) if v in onto]
        if not kept:
            raise InvalidOrderingError(f"projection of {self.name or list(self.order)} onto {sorted(onto)} is empty")
        one = self.semiring.one
        entries = {tuple(key[i] for i in kept): one for key in self._entries}
        return ListingFactor(tuple(self.order[i] for i in kept), self.semiring, entries, f"{self.name}/proj")

    def product_marginalize(self, vertex: int, domain_size: int) -> Tuple["ListingFactor", int]:
        """
        ⊗ out the last trie variable over its full domain; a group with fewer than
        `domain_size` stored leaves contains a 𝟎 and vanishes. Returns (factor, ⊗ count).
        """
        if not self.order or self.order[-1] != vertex:
            raise InvalidOrderingError(f"{vertex} is not the last variable of {list(self.order)}")
        groups: Dict[Key, List[Any]] = {}
        for key, value in self._sorted:
            groups.setdefault(key[:-1], []).append(value)
        mults = 0
        entries: Dict[Key, Any] = {}
        mul = self.semiring.mul
        for prefix, values in groups.items():
            if len(values) < domain_size:
                continue
            total = values[0]
            for value in values[1:]:
                total = mul(total, value)
                mults += 1
            if not self.semiring.is_zero(total):
                entries[prefix] = total
        return ListingFactor(self.order[:-1], self.semiring, entries, self.name), mults

    def map_values(self, fn: Callable[[Any], Any]) -> "ListingFactor":
        """Apply `fn` to every stored value; 𝟎 results are dropped."""
        zero = self.semiring.is_zero
        entries = {}
        for key, value in self._entries.items():
            mapped = fn(value)
            if not zero(mapped):
                entries[key] = mapped
        return ListingFactor(self.order, self.semiring, entries, self.name)

    def is_idempotent_valued(self) -> bool:
        return all(self.semiring.is_idempotent(v) for v in self._entries.values())

    def __iter__(self) -> Iterator[Tuple[Key, Any]]:
        return iter(self._sorted)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ListingFactor) or sorted(self.order) != sorted(other.order):
            return False
        return self.reorder(other.order)._entries == other._entries

    def __repr__(self) -> str:
        return f"ListingFactor({self.name or '?'}, order={list(self.order)}, size={self.size})"

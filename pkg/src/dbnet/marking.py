"""Immutable multiset markings over named places.

Tokens are tuples of :class:`~dbnet.relational.Value`.  Both net layers
use the same marking type; relation places of the translated net keep set
semantics by construction (the surrounding gadgets guard every insert),
not by anything in this module.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Tuple

from .relational import ContractError, Value, render_value

__all__ = ["Marking", "render_token"]


def render_token(token: tuple) -> str:
    return "(" + ",".join(render_value(v) for v in token) + ")"


def _token_sort_key(token: tuple):
    return tuple(v.sort_key() for v in token)


class Marking:
    """place -> multiset of tokens, value-semantics equality."""

    __slots__ = ("_places", "_key", "_hash")

    def __init__(self, places: Mapping[str, Mapping[tuple, int]]):
        cleaned = {}
        for place, bag in places.items():
            kept = {tok: n for tok, n in bag.items() if n > 0}
            if any(n < 0 for n in bag.values()):
                raise ContractError(f"negative multiplicity in place {place!r}")
            cleaned[place] = kept
        self._places = cleaned
        self._key = tuple(
            (place, tuple(sorted(cleaned[place].items(), key=lambda kv: _token_sort_key(kv[0]))))
            for place in sorted(cleaned)
            if cleaned[place]
        )
        self._hash = hash(self._key)

    @staticmethod
    def from_tokens(tokens: Iterable[Tuple[str, tuple]]) -> "Marking":
        acc: dict = {}
        for place, tok in tokens:
            acc.setdefault(place, {})
            acc[place][tok] = acc[place].get(tok, 0) + 1
        return Marking(acc)

    # -- queries ----------------------------------------------------------
    def count(self, place: str, token: tuple) -> int:
        return self._places.get(place, {}).get(token, 0)

    def tokens(self, place: str):
        """(token, multiplicity) pairs in canonical order."""
        bag = self._places.get(place, {})
        return sorted(bag.items(), key=lambda kv: _token_sort_key(kv[0]))

    def places_marked(self):
        return sorted(p for p, bag in self._places.items() if bag)

    def total(self, place: str) -> int:
        return sum(self._places.get(place, {}).values())

    def size(self) -> int:
        return sum(sum(bag.values()) for bag in self._places.values())

    def covers(self, demands: Iterable[Tuple[str, tuple]]) -> bool:
        """Multiset inclusion: enough copies of every demanded token."""
        need: dict = {}
        for place, tok in demands:
            need[(place, tok)] = need.get((place, tok), 0) + 1
        return all(self.count(p, t) >= n for (p, t), n in need.items())

    def all_values(self):
        for bag in self._places.values():
            for tok, n in bag.items():
                for v in tok:
                    yield v

    # -- updates (return new Marking) -------------------------------------
    def minus(self, removals: Iterable[Tuple[str, tuple]]) -> "Marking":
        acc = {p: dict(bag) for p, bag in self._places.items()}
        for place, tok in removals:
            bag = acc.setdefault(place, {})
            have = bag.get(tok, 0)
            if have < 1:
                raise ContractError(f"cannot remove {render_token(tok)} from {place!r}: absent")
            bag[tok] = have - 1
        return Marking(acc)

    def plus(self, additions: Iterable[Tuple[str, tuple]]) -> "Marking":
        acc = {p: dict(bag) for p, bag in self._places.items()}
        for place, tok in additions:
            bag = acc.setdefault(place, {})
            bag[tok] = bag.get(tok, 0) + 1
        return Marking(acc)

    # -- identity ----------------------------------------------------------
    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self):
        return self._hash

    def render(self) -> str:
        chunks = []
        for place, bag in self._key:
            toks = ",".join(
                render_token(tok) if n == 1 else f"{n}`{render_token(tok)}" for tok, n in bag
            )
            chunks.append(f"{place}{{{toks}}}")
        return " ".join(chunks)

    def __repr__(self):
        return f"Marking({self.render()})"


Marking.EMPTY = Marking({})

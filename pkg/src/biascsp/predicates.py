"""Truth-table analysis of r-ary Boolean predicates.

A predicate on r bits is stored as a lookup table of size 2^r. Accepting
strings are indexed MSB-first: the integer index of a string assigns its
highest bit to the *first* coordinate, so the string "110" has index 6.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

MAX_ARITY = 16


class PredicateError(ValueError):
    pass


def bits_of(index: int, arity: int) -> tuple[int, ...]:
    """Integer index -> bit tuple, first coordinate first."""
    return tuple((index >> (arity - 1 - t)) & 1 for t in range(arity))


def index_of(bits) -> int:
    """Bit sequence (first coordinate first) -> integer index."""
    idx = 0
    for b in bits:
        idx = (idx << 1) | (1 if b else 0)
    return idx


def bitstring(index: int, arity: int) -> str:
    return format(index, "0{}b".format(arity))


def _weight(index: int) -> int:
    return bin(index).count("1")


@dataclass(frozen=True)
class Predicate:
    """An r-ary Boolean predicate given by its full truth table."""

    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= self.arity <= MAX_ARITY:
            raise PredicateError(f"arity must be in [1, {MAX_ARITY}], got {self.arity}")
        if len(self.table) != 1 << self.arity:
            raise PredicateError(
                f"table length {len(self.table)} != 2^{self.arity}"
            )
        if any(v not in (0, 1) for v in self.table):
            raise PredicateError("table entries must be 0/1")

    def __call__(self, bits) -> int:
        return self.table[index_of(bits)]

    def evaluate_index(self, index: int) -> int:
        return self.table[index]

    def accepting(self) -> list[int]:
        """Indices of accepting strings, ascending."""
        return [b for b, v in enumerate(self.table) if v]

    def accepting_strings(self) -> list[str]:
        return [bitstring(b, self.arity) for b in self.accepting()]

    def complement_inputs(self) -> "Predicate":
        """The predicate x -> psi(~x) (all coordinates negated)."""
        return negation_conjugate(self, (-1,) * self.arity)

    def to_json(self) -> dict:
        return {"arity": self.arity, "accepting": self.accepting_strings()}

    @staticmethod
    def from_accepting(arity: int, accepting) -> "Predicate":
        table = [0] * (1 << arity)
        for a in accepting:
            idx = a if isinstance(a, int) else index_of(int(c) for c in a)
            if not 0 <= idx < len(table):
                raise PredicateError(f"accepting string {a!r} out of range for arity {arity}")
            table[idx] = 1
        return Predicate(arity, tuple(table))

    @staticmethod
    def from_json(obj: dict) -> "Predicate":
        try:
            arity = int(obj["arity"])
            accepting = obj["accepting"]
        except (KeyError, TypeError) as exc:
            raise PredicateError(f"predicate JSON needs 'arity' and 'accepting': {exc}")
        return Predicate.from_accepting(arity, accepting)


@dataclass(frozen=True)
class PredicateProfile:
    """Classification of a predicate's bias behaviour."""

    minimal_elements: tuple[int, ...]
    curve_exponent: float
    bias_independent: bool
    symmetric_weights: frozenset | None

    def to_json(self, arity: int) -> dict:
        return {
            "minimal_elements": [bitstring(b, arity) for b in self.minimal_elements],
            "exponent": None if math.isinf(self.curve_exponent) else int(self.curve_exponent),
            "bias_independent": self.bias_independent,
            "symmetric_weights": (
                sorted(self.symmetric_weights) if self.symmetric_weights is not None else None
            ),
        }


def minimal_elements(psi: Predicate) -> list[int]:
    """Accepting strings whose support contains no other accepting string's support.

    Sorted ascending as integers. Containment is on supports: b' < b iff
    (b' & b) == b' and b' != b.
    """
    accepting = psi.accepting()
    out = []
    for b in accepting:
        if not any(bp != b and (bp & b) == bp for bp in accepting):
            out.append(b)
    return out


def classify_bias_dependence(psi: Predicate) -> PredicateProfile:
    """Bias-independence test: every minimal accepting string has weight <= 1.

    The constant-zero predicate is classified as bias independent with
    exponent infinity (its optimum is 0 at every bias).
    """
    mins = minimal_elements(psi)
    if not mins:
        exponent = math.inf
        independent = True
    else:
        exponent = min(_weight(b) for b in mins)
        independent = all(_weight(b) <= 1 for b in mins)
    return PredicateProfile(
        minimal_elements=tuple(mins),
        curve_exponent=exponent,
        bias_independent=independent,
        symmetric_weights=symmetric_decomposition(psi),
    )


def negation_conjugate(psi: Predicate, pi) -> Predicate:
    """Predicate x -> psi(pi o x), where pi in {+-1}^r flips coordinates with -1."""
    pi = tuple(pi)
    if len(pi) != psi.arity:
        raise PredicateError(f"pattern length {len(pi)} != arity {psi.arity}")
    if any(s not in (1, -1) for s in pi):
        raise PredicateError("pattern entries must be +1/-1")
    flip = 0
    for t, s in enumerate(pi):
        if s == -1:
            flip |= 1 << (psi.arity - 1 - t)
    table = [0] * len(psi.table)
    for b in range(len(table)):
        table[b] = psi.table[b ^ flip]
    return Predicate(psi.arity, tuple(table))


def single_string_predicate(beta) -> Predicate:
    """psi_beta: accepts exactly the string beta (given as "110"-style string or bit tuple)."""
    bits = tuple(int(c) for c in beta)
    if not bits:
        raise PredicateError("beta must be nonempty")
    return Predicate.from_accepting(len(bits), [index_of(bits)])


def symmetric_decomposition(psi: Predicate):
    """For a permutation-invariant predicate, the set of accepted Hamming weights; else None."""
    r = psi.arity
    accepted_by_weight: dict[int, set[int]] = {}
    for b in range(1 << r):
        accepted_by_weight.setdefault(_weight(b), set()).add(psi.table[b])
    if any(len(vals) != 1 for vals in accepted_by_weight.values()):
        return None
    return frozenset(w for w, vals in accepted_by_weight.items() if vals == {1})


def permute_coordinates(psi: Predicate, order) -> Predicate:
    """Reindex coordinates: new coordinate t reads old coordinate order[t].

    order is a permutation of range(arity). The permuted predicate psi' satisfies
    psi'(x[order[0]], ..., x[order[r-1]]) == psi(x).
    """
    order = tuple(order)
    if sorted(order) != list(range(psi.arity)):
        raise PredicateError(f"order {order} is not a permutation of range({psi.arity})")
    r = psi.arity
    table = [0] * len(psi.table)
    for b in range(len(table)):
        bits = bits_of(b, r)
        old = [0] * r
        for t in range(r):
            old[order[t]] = bits[t]
        table[b] = psi.table[index_of(old)]
    return Predicate(r, tuple(table))


def all_predicates(arity: int):
    """Every predicate of the given arity (2^(2^r) tables); keep arity <= 4."""
    if arity > 4:
        raise PredicateError("enumerating all predicates is limited to arity <= 4")
    n = 1 << arity
    for mask in range(1 << n):
        yield Predicate(arity, tuple((mask >> b) & 1 for b in range(n)))


# Named predicate constructors for the CLI and tests.

def and_pred(r: int) -> Predicate:
    return Predicate.from_accepting(r, [(1 << r) - 1])


def or_pred(r: int) -> Predicate:
    return Predicate(r, tuple(0 if b == 0 else 1 for b in range(1 << r)))


def neq_pred() -> Predicate:
    return Predicate.from_accepting(2, ["01", "10"])


def eq_pred() -> Predicate:
    return Predicate.from_accepting(2, ["00", "11"])


def weight_exactly_pred(r: int, i: int) -> Predicate:
    """psi_i: accepts strings of Hamming weight exactly i."""
    if not 0 <= i <= r:
        raise PredicateError(f"weight {i} out of range for arity {r}")
    return Predicate(r, tuple(1 if _weight(b) == i else 0 for b in range(1 << r)))


def symmetric_pred(r: int, weights) -> Predicate:
    ws = set(weights)
    return Predicate(r, tuple(1 if _weight(b) in ws else 0 for b in range(1 << r)))


def parse_predicate(spec: str) -> Predicate:
    """Parse CLI predicate specs: AND:3, OR:2, NEQ, EQ, SYM:3:1,2, STR:110, ZERO:2, ONE:2."""
    parts = spec.strip().split(":")
    name = parts[0].upper()
    try:
        if name == "AND":
            return and_pred(int(parts[1]) if len(parts) > 1 else 2)
        if name == "OR":
            return or_pred(int(parts[1]) if len(parts) > 1 else 2)
        if name == "NEQ":
            return neq_pred()
        if name == "EQ":
            return eq_pred()
        if name == "SYM":
            return symmetric_pred(int(parts[1]), [int(w) for w in parts[2].split(",")])
        if name == "STR":
            return single_string_predicate(parts[1])
        if name == "ZERO":
            r = int(parts[1]) if len(parts) > 1 else 2
            return Predicate(r, (0,) * (1 << r))
        if name == "ONE":
            r = int(parts[1]) if len(parts) > 1 else 2
            return Predicate(r, (1,) * (1 << r))
    except (IndexError, ValueError) as exc:
        raise PredicateError(f"malformed predicate spec {spec!r}: {exc}")
    raise PredicateError(f"unknown predicate name {name!r}")


def coordinate_permutations(r: int):
    return itertools.permutations(range(r))

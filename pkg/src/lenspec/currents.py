"""Finite real combinations of curve classes and their lengths.

These combinations are the computable dense subset of the space of
geodesic currents; lengths extend linearly from single classes.  Negative
weights are allowed (currents form a real vector space); combinations
with nonnegative weights are flagged as measure-class.
"""

from __future__ import annotations

from dataclasses import dataclass

from .reps import SurfaceRep
from .spectrum import length_vector
from .words import (ConjugacyClass, IdentityClassError, Word, WordSyntaxError,
                    conjugacy_class)


@dataclass(frozen=True)
class CurrentCombo:
    """Formal weighted sum of curve classes; zero weights are dropped."""

    terms: tuple = ()   # ((ConjugacyClass, weight), ...) sorted by class

    @classmethod
    def from_pairs(cls, pairs) -> "CurrentCombo":
        acc = {}
        for c, weight in pairs:
            acc[c] = acc.get(c, 0.0) + float(weight)
        terms = tuple(sorted(((c, w) for c, w in acc.items() if w != 0.0),
                             key=lambda t: (len(t[0].representative),
                                            t[0].representative.letters)))
        return cls(terms)

    @classmethod
    def of_word(cls, w: Word, weight: float = 1.0) -> "CurrentCombo":
        return cls.from_pairs([(conjugacy_class(w), weight)])

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_measure_class(self) -> bool:
        return all(w >= 0.0 for _, w in self.terms)

    def scaled(self, factor: float) -> "CurrentCombo":
        return CurrentCombo.from_pairs(
            (c, factor * w) for c, w in self.terms)

    def __add__(self, other: "CurrentCombo") -> "CurrentCombo":
        return CurrentCombo.from_pairs(list(self.terms) + list(other.terms))

    def __str__(self):
        return "\n".join(f"{format(w, '.12g')} {c}" for c, w in self.terms)


def combo_arith(a: float, alpha: CurrentCombo,
                b: float, beta: CurrentCombo) -> CurrentCombo:
    """Termwise a*alpha + b*beta."""
    return alpha.scaled(a) + beta.scaled(b)


def pullback_R(alpha: CurrentCombo) -> CurrentCombo:
    """Orientation reversal: each class goes to its inverse class."""
    return CurrentCombo.from_pairs(
        (c.inverse_class(), w) for c, w in alpha.terms)


def unoriented_embed(w: Word) -> CurrentCombo:
    """Unoriented curve as a current: half the class plus half its reverse."""
    c = conjugacy_class(w)
    return CurrentCombo.from_pairs([(c, 0.5), (c.inverse_class(), 0.5)])


def current_length(rep: SurfaceRep, alpha: CurrentCombo, i: int) -> float:
    """Linear extension of l_i (1-based index) to combinations."""
    total = 0.0
    for c, weight in alpha.terms:
        total += weight * length_vector(rep, c.representative).entry(i)
    return total


def parse_combo(text: str) -> CurrentCombo:
    """Parse lines of the form ``<weight> <word>``; blank lines ignored."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        try:
            weight = float(head)
        except ValueError:
            raise WordSyntaxError(
                f"line {lineno}: expected a weight, got {head!r}") from None
        word = Word.parse(rest)
        if not word.cyclic_reduce():
            raise IdentityClassError(
                f"line {lineno}: the identity carries no curve class")
        pairs.append((conjugacy_class(word), weight))
    return CurrentCombo.from_pairs(pairs)

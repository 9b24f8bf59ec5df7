"""Words, conjugacy classes and bounded enumeration for the genus-2 surface group.

Letters are small integers 0..7 in the fixed order

    a1 < b1 < a2 < b2 < A1 < B1 < A2 < B2

(capitals are inverses), so that tuple comparison of letter sequences is
the canonical total order and ``letter ^ 4`` is inversion.  Everything in
this module is free-group combinatorics; coincidences forced by the
surface relation are resolved downstream against the matrix oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

LETTER_NAMES = ("a1", "b1", "a2", "b2", "A1", "B1", "A2", "B2")
_NAME_TO_LETTER = {name: i for i, name in enumerate(LETTER_NAMES)}
N_GENERATORS = 4


class WordSyntaxError(ValueError):
    """Raised for malformed word text."""


class IdentityClassError(ValueError):
    """Raised when the identity element is used where a curve class is required."""


def inverse_letter(letter: int) -> int:
    return letter ^ 4


def generator_index(letter: int) -> int:
    """0-based generator index of a letter (sign discarded)."""
    return letter & 3


def letter_sign(letter: int) -> int:
    return -1 if letter >= 4 else 1


def free_reduce(raw) -> tuple:
    """Freely reduce a letter sequence (cancel adjacent inverse pairs)."""
    out = []
    for letter in raw:
        if out and out[-1] == letter ^ 4:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; the empty word is the identity."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple(self.letters)
        for v in letters:
            if not 0 <= v <= 7:
                raise WordSyntaxError(f"letter out of range: {v!r}")
        object.__setattr__(self, "letters", free_reduce(letters))

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse whitespace-separated tokens, e.g. ``"a1 B1 a2"``."""
        letters = []
        for token in text.split():
            try:
                letters.append(_NAME_TO_LETTER[token])
            except KeyError:
                raise WordSyntaxError(f"unknown letter {token!r}") from None
        return cls(tuple(letters))

    def __str__(self):
        return " ".join(LETTER_NAMES[v] for v in self.letters)

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __pow__(self, k: int) -> "Word":
        if k < 0:
            return self.inverse() ** (-k)
        return Word(self.letters * k)

    def inverse(self) -> "Word":
        return Word(tuple(v ^ 4 for v in reversed(self.letters)))

    def is_cyclically_reduced(self) -> bool:
        L = self.letters
        return len(L) < 2 or L[0] != L[-1] ^ 4

    def cyclic_reduce(self) -> "Word":
        L = list(self.letters)
        while len(L) >= 2 and L[0] == L[-1] ^ 4:
            L = L[1:-1]
        return Word(tuple(L))

    def rotations(self):
        """All cyclic rotations (the word itself first)."""
        L = self.letters
        return [Word(L[k:] + L[:k]) for k in range(max(len(L), 1))]

    def uses_all_generators(self) -> bool:
        return {v & 3 for v in self.letters} == set(range(N_GENERATORS))


IDENTITY = Word()


@dataclass(frozen=True)
class ConjugacyClass:
    """Curve class: cyclically reduced, rotation-minimal representative."""

    representative: Word

    def __post_init__(self):
        w = self.representative
        if not w.is_cyclically_reduced():
            raise ValueError("representative must be cyclically reduced")
        if min(r.letters for r in w.rotations()) != w.letters:
            raise ValueError("representative must be rotation-minimal")

    @property
    def word(self) -> Word:
        return self.representative

    def __len__(self):
        return len(self.representative)

    def __str__(self):
        return str(self.representative)

    def inverse_class(self) -> "ConjugacyClass":
        return conjugacy_class(self.representative.inverse())


def conjugacy_class(w: Word) -> ConjugacyClass:
    """Canonicalize a nonempty word up to free-group conjugacy."""
    w = w.cyclic_reduce()
    if not w:
        raise IdentityClassError("the identity has no curve class")
    best = min(r.letters for r in w.rotations())
    return ConjugacyClass(Word(best))


def _extend(prefix, length, out):
    if len(prefix) == length:
        out.append(tuple(prefix))
        return
    banned = prefix[-1] ^ 4 if prefix else None
    for v in range(8):
        if v != banned:
            prefix.append(v)
            _extend(prefix, length, out)
            prefix.pop()


def enumerate_classes(max_len: int) -> list:
    """Rotation-minimal cyclically reduced words of length 1..max_len.

    One entry per free-group conjugacy class; classes that coincide in the
    surface group are not merged here.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    classes = []
    for length in range(1, max_len + 1):
        reduced = []
        _extend([], length, reduced)
        for letters in reduced:
            if letters[0] == letters[-1] ^ 4:
                continue
            rots = [letters[k:] + letters[:k] for k in range(length)]
            if min(rots) == letters:
                classes.append(ConjugacyClass(Word(letters)))
    return classes


@dataclass(frozen=True)
class Presentation:
    """Genus-2 one-relator presentation; the relator is a length-8 word."""

    relator: Word
    genus: int = 2

    def __post_init__(self):
        if self.genus != 2:
            raise ValueError("only genus 2 is supported")
        r = self.relator
        if len(r) != 8 or not r.is_cyclically_reduced() or not r.uses_all_generators():
            raise ValueError("relator must be cyclically reduced, of length 8, "
                             "and use all four generators")


def random_words(rng, count: int, max_len: int, min_len: int = 1) -> list:
    """Seeded sample of nonempty freely reduced words, for tests and validation."""
    out = []
    while len(out) < count:
        length = int(rng.integers(min_len, max_len + 1))
        letters = []
        for _ in range(length):
            choices = [v for v in range(8)
                       if not letters or v != letters[-1] ^ 4]
            letters.append(int(choices[rng.integers(0, len(choices))]))
        w = Word(tuple(letters))
        if w:
            out.append(w)
    return out

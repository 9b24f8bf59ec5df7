import itertools

import numpy as np
import pytest

from lenspec.words import (ConjugacyClass, IdentityClassError, Presentation,
                           Word, WordSyntaxError, conjugacy_class,
                           enumerate_classes, free_reduce, random_words)

A1, B1, A2, B2 = 0, 1, 2, 3
IA1, IB1, IA2, IB2 = 4, 5, 6, 7


def brute_reduce(letters):
    """Independent oracle: delete any adjacent inverse pair until none remain."""
    letters = list(letters)
    changed = True
    while changed:
        changed = False
        for i in range(len(letters) - 1):
            if letters[i] == letters[i + 1] ^ 4:
                del letters[i:i + 2]
                changed = True
                break
    return tuple(letters)


def test_free_reduce_examples():
    assert free_reduce((A1, IA1)) == ()
    assert free_reduce((A1, B1, IB1, A2)) == (A1, A2)
    assert free_reduce((A1, A1, IA1, IA1, B2)) == (B2,)


def test_free_reduce_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        raw = tuple(rng.integers(0, 8, size=rng.integers(0, 12)))
        assert free_reduce(raw) == brute_reduce(raw)


def test_free_reduce_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(200):
        raw = tuple(rng.integers(0, 8, size=10))
        once = free_reduce(raw)
        assert free_reduce(once) == once


def test_inverse_examples():
    assert Word().inverse() == Word()
    assert Word((A1, B1)).inverse() == Word((IB1, IA1))


def test_inverse_involution_and_cancellation():
    rng = np.random.default_rng(2)
    for w in random_words(rng, 1000, 20):
        assert w.inverse().inverse() == w
        assert not (w * w.inverse())


def test_word_parse_roundtrip():
    w = Word.parse("a1 B1 a2 B2 A1 b1 A2 b2")
    assert str(w) == "a1 B1 a2 B2 A1 b1 A2 b2"
    assert Word.parse(str(w)) == w
    with pytest.raises(WordSyntaxError):
        Word.parse("a1 c3")


def test_word_powers():
    w = Word((A1, B1))
    assert (w ** 3).letters == (A1, B1) * 3
    assert w ** -1 == w.inverse()
    assert w ** 0 == Word()


def test_conjugacy_class_examples():
    assert conjugacy_class(Word((B1, A1))).representative == Word((A1, B1))
    assert conjugacy_class(Word((IA2, A1, A2))).representative == Word((A1,))
    with pytest.raises(IdentityClassError):
        conjugacy_class(Word())


def test_conjugacy_class_rotation_invariance():
    rng = np.random.default_rng(3)
    for w in random_words(rng, 100, 8):
        cw = w.cyclic_reduce()
        if not cw:
            continue
        target = conjugacy_class(cw)
        for rot in cw.rotations():
            assert conjugacy_class(rot) == target


def test_conjugacy_class_conjugation_invariance():
    rng = np.random.default_rng(4)
    words = random_words(rng, 500, 8)
    conjs = random_words(rng, 500, 5)
    for w, u in zip(words, conjs):
        if not w.cyclic_reduce():
            continue
        assert conjugacy_class(u * w * u.inverse()) == conjugacy_class(w)


def brute_classes(length):
    out = set()
    for letters in itertools.product(range(8), repeat=length):
        if any(letters[i] == letters[i + 1] ^ 4 for i in range(length - 1)):
            continue
        if letters[0] == letters[-1] ^ 4:
            continue
        rots = [letters[k:] + letters[:k] for k in range(length)]
        if min(rots) == letters:
            out.add(letters)
    return out


def test_enumerate_classes_small_counts():
    assert len(enumerate_classes(1)) == 8
    for c in enumerate_classes(2):
        w = c.representative
        assert w.is_cyclically_reduced()
        assert min(r.letters for r in w.rotations()) == w.letters


@pytest.mark.parametrize("max_len", [1, 2, 3, 4, 5, 6])
def test_enumerate_classes_against_brute_force(max_len):
    got = {c.representative.letters for c in enumerate_classes(max_len)
           if len(c) == max_len}
    assert got == brute_classes(max_len)


def test_enumerate_classes_no_duplicates():
    classes = enumerate_classes(4)
    assert len(classes) == len(set(classes))


def test_presentation_validation():
    rel = Word.parse("a1 B1 a2 B2 A1 b1 A2 b2")
    Presentation(rel)
    with pytest.raises(ValueError):
        Presentation(Word.parse("a1 b1 A1 B1 a1 b1 A1 B1"))  # missing generators
    with pytest.raises(ValueError):
        Presentation(Word.parse("a1 b1 a2 b2"))  # too short


def test_conjugacy_class_requires_canonical_form():
    with pytest.raises(ValueError):
        ConjugacyClass(Word((B1, A1)))  # not rotation-minimal

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lenspec.reps import build_octagon_fuchsian, deform, sym_power_lift
from lenspec.spectrum import (FibreMetric, LengthVector, eigenline_flip_check,
                              identity_report, length_vector, orbit_increments,
                              orbit_integral, spectrum, spectrum_csv_lines,
                              thurston_length)
from lenspec.words import Word, conjugacy_class, enumerate_classes, random_words

T0 = math.acosh(1.0 + math.sqrt(2.0))


@pytest.fixture(scope="module")
def octagon():
    return build_octagon_fuchsian()


@pytest.fixture(scope="module")
def lifts(octagon):
    return {n: sym_power_lift(octagon, n) for n in range(3, 7)}


def test_length_vector_type_invariants():
    with pytest.raises(ValueError):
        LengthVector(np.array([1.0, 2.0, -3.0]))   # not decreasing
    with pytest.raises(ValueError):
        LengthVector(np.array([2.0, 1.0]))          # sum far from zero


def test_length_vector_identity_rejected(octagon):
    with pytest.raises(ValueError):
        length_vector(octagon, Word())
    with pytest.raises(ValueError):
        length_vector(octagon, Word.parse("a1 A1"))


def test_fuchsian_closed_form(octagon, lifts):
    rng = np.random.default_rng(20)
    words = random_words(rng, 40, 10)
    for w in words:
        if not w.cyclic_reduce():
            continue
        t = length_vector(octagon, w).entry(1)
        for n in range(2, 7):
            rep = octagon if n == 2 else lifts[n]
            lv = length_vector(rep, w)
            expected = [(n + 1 - 2 * i) * t for i in range(1, n + 1)]
            assert np.abs(lv.values - expected).max() <= 1e-8


def test_sum_zero_and_flip(octagon, lifts):
    rng = np.random.default_rng(21)
    r3 = lifts[3]
    for w in random_words(rng, 40, 8):
        if not w.cyclic_reduce():
            continue
        lv = length_vector(r3, w)
        assert abs(lv.values.sum()) <= 1e-8 * 3
        bw = length_vector(r3, w.inverse())
        assert np.abs(bw.values + lv.values[::-1]).max() <= 1e-8


def test_conjugation_invariance(octagon, lifts):
    rng = np.random.default_rng(22)
    r3 = lifts[3]
    words = random_words(rng, 200, 7)
    conjs = random_words(rng, 200, 5)
    for w, u in zip(words, conjs):
        if not w.cyclic_reduce():
            continue
        lv = length_vector(r3, w)
        lc = length_vector(r3, u * w * u.inverse())
        assert np.abs(lv.values - lc.values).max() <= 1e-8


def test_thurston_length(octagon):
    w = Word.parse("a1")
    assert abs(thurston_length(octagon, w) - 0.5 * T0) <= 1e-12
    lv = length_vector(octagon, w)
    assert abs(thurston_length(octagon, w)
               - 0.25 * (lv.entry(1) - lv.entry(2))) <= 1e-12
    u = Word.parse("b2 A2")
    assert abs(thurston_length(octagon, u * w * u.inverse())
               - thurston_length(octagon, w)) <= 1e-10
    with pytest.raises(ValueError):
        thurston_length(sym_power_lift(octagon, 3), w)


def test_flip_check_examples(octagon, lifts):
    assert eigenline_flip_check(lifts[4], Word.parse("a1 b1"))
    for c in enumerate_classes(3):
        assert eigenline_flip_check(lifts[3], c.representative)


def test_orbit_integral_equals_length(octagon, lifts):
    rng = np.random.default_rng(23)
    r3 = lifts[3]
    for trial in range(10):
        w = random_words(rng, 1, 8)[0].cyclic_reduce()
        if not w:
            continue
        i = int(rng.integers(1, 4))
        metric = FibreMetric.random(3, int(rng.integers(0, 1000)))
        total = orbit_integral(r3, w, i, metric)
        assert abs(total - length_vector(r3, w).entry(i)) <= 1e-8


def test_orbit_integral_metric_independence(octagon, lifts):
    r3 = lifts[3]
    w = Word.parse("a1 b1 A2")
    m1, m2 = FibreMetric.random(3, 1), FibreMetric.random(3, 2)
    inc1 = orbit_increments(r3, w, 1, m1)
    inc2 = orbit_increments(r3, w, 1, m2)
    assert abs(inc1.sum() - inc2.sum()) <= 1e-8
    assert np.abs(inc1 - inc2).max() > 1e-3


def test_orbit_integral_rotation_invariance(octagon, lifts):
    r3 = lifts[3]
    w = Word.parse("a1 b1 A2 b2")
    metric = FibreMetric.random(3, 9)
    totals = [orbit_integral(r3, rot, 2, metric) for rot in w.rotations()]
    assert np.ptp(totals) <= 1e-8


def test_fibre_metric_validation():
    with pytest.raises(ValueError):
        FibreMetric(np.array([[1.0, 0.2], [0.0, 1.0]]))   # not symmetric
    with pytest.raises(ValueError):
        FibreMetric(np.array([[1.0, 0.0], [0.0, -2.0]]))  # not positive


def test_identity_report(octagon, lifts):
    report = identity_report(lifts[3], enumerate_classes(4))
    assert report.passed
    assert report.max_sum_violation <= 3e-8
    assert report.max_flip_violation <= 1e-8


def test_identity_report_deformed(octagon, lifts):
    deformed = deform(lifts[3], seed=11, epsilon=1e-3)
    report = identity_report(deformed, enumerate_classes(4))
    assert report.passed


def test_spectrum_no_merge_at_length_one(octagon):
    entries = spectrum(octagon, 1)
    assert len(entries) == 8
    for e in entries:
        assert abs(e.lengths.entry(1) - T0 * 2) <= 1e-9


def test_spectrum_systole(octagon):
    entries = spectrum(octagon, 4)
    assert abs(entries[0].lengths.entry(1) - 2 * T0) <= 1e-9


def test_spectrum_merges_relator_chunk(octagon):
    # five relator letters equal the inverse of the remaining three,
    # so two distinct canonical three-letter classes coincide
    rel = octagon.presentation.relator
    chunk_class = conjugacy_class(Word(rel.letters[:5]))
    partner_class = conjugacy_class(Word(rel.letters[5:]).inverse())
    assert chunk_class != partner_class
    entries = spectrum(octagon, 3)
    owners = {}
    for e in entries:
        owners[e.cls] = e.cls
        for m in e.merged:
            owners[m] = e.cls
    assert owners[chunk_class] == owners[partner_class]


def test_spectrum_keeps_inverse_classes_apart(octagon):
    entries = spectrum(octagon, 2)
    classes = {e.cls for e in entries}
    assert conjugacy_class(Word.parse("a1")) in classes
    assert conjugacy_class(Word.parse("A1")) in classes


def test_spectrum_entries_satisfy_identities(octagon, lifts):
    entries = spectrum(lifts[3], 3)
    for e in entries:
        v = e.lengths.values
        assert abs(v.sum()) <= 1e-8 * 3
        assert np.all(np.diff(v) < 0)


def test_spectrum_csv_format(octagon):
    lines = spectrum_csv_lines(spectrum(octagon, 2))
    assert lines[0] == "class,len,l1,l2"
    first = lines[1].split(",")
    assert len(first) == 4
    float(first[2]), float(first[3])

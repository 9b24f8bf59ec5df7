import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lenspec.eigen import (DegenerateSpectrumError, eigen_sorted, ext_power,
                           evaluate_compound, log_eigen_batch, word_eigen,
                           word_ladders)
from lenspec.reps import (ScaledMatrix, build_octagon_fuchsian, evaluate,
                          sym_power_lift)
from lenspec.words import Word, random_words

T0 = math.acosh(1.0 + math.sqrt(2.0))


@pytest.fixture(scope="module")
def octagon():
    return build_octagon_fuchsian()


def test_eigen_sorted_diagonal():
    data = eigen_sorted(ScaledMatrix.of(np.diag([2.0, 1.0, 0.5])))
    assert_allclose(data.log_magnitudes, [math.log(2.0), 0.0, -math.log(2.0)],
                    atol=1e-14)
    assert list(data.signs) == [1, 1, 1]
    assert_allclose(np.abs(data.eigenlines), np.eye(3), atol=1e-14)


def test_eigen_sorted_negative_eigenvalue_signs():
    data = eigen_sorted(ScaledMatrix.of(np.diag([-3.0, 2.0, -0.1])))
    assert list(data.signs) == [-1, 1, -1]


def test_eigen_sorted_rejects_rotation():
    theta = 0.7
    R = np.array([[math.cos(theta), -math.sin(theta)],
                  [math.sin(theta), math.cos(theta)]])
    with pytest.raises(DegenerateSpectrumError):
        eigen_sorted(ScaledMatrix.of(R))


def test_eigen_sorted_rejects_tiny_gap():
    with pytest.raises(DegenerateSpectrumError):
        eigen_sorted(ScaledMatrix.of(np.diag([1.0 + 1e-9, 1.0, 0.5])))


def test_octagon_generator_log_eigenvalues(octagon):
    data = word_eigen(octagon, Word.parse("a1"))
    assert_allclose(data.log_magnitudes, [T0, -T0], atol=1e-12)


def test_lift_log_eigenvalues(octagon):
    r3 = sym_power_lift(octagon, 3)
    data = word_eigen(r3, Word.parse("a1"))
    assert_allclose(data.log_magnitudes, [2 * T0, 0.0, -2 * T0], atol=1e-12)


def test_ext_power_homomorphism():
    rng = np.random.default_rng(11)
    for _ in range(20):
        A, B = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
        for k in (2, 3):
            left = ext_power(A @ B, k)
            right = ext_power(A, k) @ ext_power(B, k)
            assert_allclose(left, right, atol=1e-10 * np.abs(right).max())


def test_evaluate_compound_matches_composite(octagon):
    rng = np.random.default_rng(12)
    r3 = sym_power_lift(octagon, 3)
    for w in random_words(rng, 20, 6):
        sm = evaluate_compound(r3, w, 2)
        direct = ext_power(evaluate(r3, w).represented(), 2)
        assert np.abs(sm.represented() - direct).max() \
            <= 1e-9 * np.abs(direct).max()


def test_word_ladders_match_fuchsian_oracle(octagon):
    # closed form for lifted words: exponents (n+1-2i) times the base rate
    rng = np.random.default_rng(13)
    r3 = sym_power_lift(octagon, 3)
    words = [w for w in random_words(rng, 25, 6) if w.cyclic_reduce()]
    ladders = word_ladders(r3, words)
    assert ladders.ok.all()
    base = word_ladders(octagon, words)
    for i in range(len(words)):
        t = base.log_magnitudes[i, 0]
        assert_allclose(ladders.log_magnitudes[i], [2 * t, 0.0, -2 * t],
                        atol=1e-9)


def test_dense_route_agrees_on_short_words(octagon):
    # the composite-matrix route holds up while cancellation is mild
    r3 = sym_power_lift(octagon, 3)
    words = [Word.parse(s) for s in ("a1", "b2", "a1 b1", "A2 b1")]
    ladders = word_ladders(r3, words)
    mats = np.empty((len(words), 3, 3))
    logs = np.empty(len(words))
    for i, w in enumerate(words):
        sm = evaluate(r3, w)
        mats[i], logs[i] = sm.matrix, sm.log_scale
    dense = log_eigen_batch(mats, logs)
    assert np.abs(ladders.log_magnitudes - dense.log_magnitudes).max() <= 1e-10
    assert np.array_equal(ladders.signs, dense.signs)


def test_word_ladders_far_beyond_dense_range(octagon):
    # spreads of several hundred log units: the ladder must stay exact
    r5 = sym_power_lift(octagon, 5)
    w = Word.parse("a1") ** 40
    ladders = word_ladders(r5, [w])
    assert ladders.ok[0]
    expected = 40 * T0 * np.array([4.0, 2.0, 0.0, -2.0, -4.0])
    assert np.abs(ladders.log_magnitudes[0] - expected).max() <= 1e-8 * 40


def test_ladder_sum_matches_determinant(octagon):
    rng = np.random.default_rng(14)
    r4 = sym_power_lift(octagon, 4)
    words = random_words(rng, 30, 8)
    ladders = word_ladders(r4, words)
    assert np.abs(ladders.log_magnitudes.sum(axis=1)).max() <= 1e-10

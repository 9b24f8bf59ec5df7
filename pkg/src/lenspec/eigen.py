"""Sorted eigenvalue data, robust at any word length.

A dense eigensolver resolves an eigenvalue only down to roughly
``eps * ||A||``, so naive extraction fails twice for images of words.
First, minors (exterior powers) of a composite product underflow into
noise as soon as the discarded part of the spectrum leaves machine range;
exterior powers are therefore always evaluated as renormalized products
of the letters' exterior powers.  Second, a product of hyperbolic factors
can have norm exponentially larger than its spectral radius (a short
geodesic written with long letters), which costs the dominant eigenvalue
that many digits of accuracy.  The ladder of partial sums
``l_1 + ... + l_k`` is therefore computed by power iteration around the
letter cycle in each exterior power: every step is backward stable
relative to its own factor, the per-step renormalization tracks the true
growth, and the iteration converges geometrically in the spectral gap.
Eigenvectors, only needed at desk scale, come from a dense decomposition
of the matrix itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import DEFAULT
from .reps import ScaledMatrix, SurfaceRep
from .words import Word

_LN2 = math.log(2.0)
_IDENTITY_LETTER = 8          # padding index for the letter gather tables
_POWER_RESIDUAL = 1e-10       # above the iteration noise floor at desk scale
_MAX_CYCLES = 256


class DegenerateSpectrumError(Exception):
    """Spectrum not real or not gapped: not Hitchin-like, or numerically degenerate."""


@lru_cache(maxsize=None)
def _subsets(n: int, k: int) -> tuple:
    return tuple(itertools.combinations(range(n), k))


def ext_power_batch(mats: np.ndarray, k: int) -> np.ndarray:
    """k-th exterior power (matrix of k x k minors) of a stack of matrices."""
    n = mats.shape[-1]
    if k == 1:
        return mats
    idx = _subsets(n, k)
    C = len(idx)
    out = np.empty(mats.shape[:-2] + (C, C))
    for i, rows in enumerate(idx):
        sub = mats[..., rows, :]
        for j, cols in enumerate(idx):
            out[..., i, j] = np.linalg.det(sub[..., :, cols])
    return out


def ext_power(M: np.ndarray, k: int) -> np.ndarray:
    return ext_power_batch(M[None, :, :], k)[0]


def compound_images(rep: SurfaceRep, k: int) -> tuple:
    """Exterior powers of the letter images, normalized; cached per rep."""
    cache = rep.__dict__.setdefault("_compound_images", {})
    if k not in cache:
        cache[k] = tuple(ScaledMatrix.of(ext_power(rep.letter_image(v), k))
                         for v in range(8))
    return cache[k]


def _letter_tables(rep: SurfaceRep, k: int):
    """Gather tables (9, C, C) and (9,) with the identity as padding."""
    cache = rep.__dict__.setdefault("_letter_tables", {})
    if k not in cache:
        images = compound_images(rep, k)
        C = images[0].n
        mats = np.empty((9, C, C))
        logs = np.empty(9)
        for v in range(8):
            mats[v], logs[v] = images[v].matrix, images[v].log_scale
        mats[_IDENTITY_LETTER] = np.eye(C)
        logs[_IDENTITY_LETTER] = 0.0
        mats.setflags(write=False)
        logs.setflags(write=False)
        cache[k] = (mats, logs)
    return cache[k]


def evaluate_compound(rep: SurfaceRep, w: Word, k: int) -> ScaledMatrix:
    """Image of a word in the k-th exterior power representation."""
    letters = compound_images(rep, k)
    size = letters[0].n
    M, log = np.eye(size), 0.0
    for v in w.letters:
        M = M @ letters[v].matrix
        peak = np.abs(M).max()
        _, e = math.frexp(peak)
        M /= 2.0 ** e
        log += e * _LN2 + letters[v].log_scale
    return ScaledMatrix(M, log)


def _renormalize_stack(mats: np.ndarray, logs: np.ndarray):
    peak = np.abs(mats).max(axis=(-2, -1))
    exps = np.frexp(peak)[1]
    mats /= 2.0 ** exps[:, None, None]
    logs += exps * _LN2
    return mats, logs


def _dominant_pair(mats: np.ndarray):
    """Dominant eigenvalue and top-two magnitude gap per stacked matrix."""
    ev = np.linalg.eigvals(mats)
    mags = np.abs(ev)
    rows = np.arange(ev.shape[0])
    top = np.argmax(mags, axis=1)
    mu = ev[rows, top]
    rest = mags.copy()
    rest[rows, top] = -np.inf
    second = rest.max(axis=1)
    with np.errstate(divide="ignore"):
        gap = np.log(np.abs(mu)) - np.log(second)
    return mu, gap


def _cycle_power_top(rep: SurfaceRep, words, k: int,
                     residual_tol: float = _POWER_RESIDUAL,
                     max_cycles: int = _MAX_CYCLES,
                     record_cycles: int = 16):
    """Top log-magnitude of each word's image in the k-th exterior power.

    Batched power iteration around the letter cycles; words shorter than
    the longest are padded with identity letters (harmless inside a
    cycle).  After the iterates settle, the growth is averaged over
    ``record_cycles`` further cycles: the endpoint correction is bounded,
    so the extraction bias shrinks by that factor.  Returns
    ``(top_log, sign, converged)``; an unconverged word has a complex or
    insufficiently gapped dominant pair.
    """
    mats, logs = _letter_tables(rep, k)
    C = mats.shape[-1]
    words = list(words)
    N = len(words)
    L = max(len(w) for w in words)
    idx = np.full((N, L), _IDENTITY_LETTER, dtype=np.int8)
    for i, w in enumerate(words):
        idx[i, :len(w)] = w.letters

    v = np.tile(1.0 + 1e-3 * np.arange(C), (N, 1))
    v /= np.linalg.norm(v, axis=1)[:, None]
    sign = np.ones(N)
    converged = np.zeros(N, dtype=bool)

    def run_cycle(v):
        cycle_growth = np.zeros(N)
        for t in range(L):
            step = mats[idx[:, t]]
            v = np.einsum("nij,nj->ni", step, v)
            norms = np.linalg.norm(v, axis=1)
            cycle_growth += np.log(norms) + logs[idx[:, t]]
            v /= norms[:, None]
        return v, cycle_growth

    for _ in range(max_cycles):
        prev = v
        v, _ = run_cycle(v)
        align = np.einsum("ni,ni->n", v, prev)
        s = np.where(align < 0, -1.0, 1.0)
        residual = np.linalg.norm(v - s[:, None] * prev, axis=1)
        newly = (~converged) & (residual <= residual_tol)
        sign[newly] = s[newly]
        converged |= newly
        if converged.all():
            break

    total = np.zeros(N)
    for _ in range(record_cycles):
        v, cycle_growth = run_cycle(v)
        total += cycle_growth
    top_log = np.where(converged, total / record_cycles, np.nan)
    return top_log, sign, converged


@dataclass(frozen=True)
class LogEigenBatch:
    """Per-word sorted log-magnitudes, eigenvalue signs and health flags."""

    log_magnitudes: np.ndarray   # (N, n), strictly decreasing rows when ok
    signs: np.ndarray            # (N, n), entries in {-1, +1}
    real_ok: np.ndarray          # (N,) dominant compound eigenvalues real
    gap_ok: np.ndarray           # (N,) consecutive log gaps above tolerance

    @property
    def ok(self) -> np.ndarray:
        return self.real_ok & self.gap_ok


def _assemble(partial, sign_partial, real_ok, gap_ok, gap_tol):
    log_magnitudes = np.diff(partial, axis=1)
    gaps = log_magnitudes[:, :-1] - log_magnitudes[:, 1:]
    if gaps.size:
        gap_ok = gap_ok & (np.nan_to_num(gaps, nan=-1.0) > gap_tol).all(axis=1)
    signs = sign_partial[:, 1:] * sign_partial[:, :-1]
    return LogEigenBatch(log_magnitudes, signs.astype(int), real_ok, gap_ok)


def word_ladders(rep: SurfaceRep, words,
                 gap_tol: float = DEFAULT.gap_tol,
                 imag_tol: float = DEFAULT.eigen_imag_rel) -> LogEigenBatch:
    """Log-magnitude ladders for the images of many words.

    Partial sums come from cycle power iteration in each exterior power;
    the determinant, accumulated letter by letter, anchors the full sum.
    A word whose iteration fails to converge (complex dominant pair, or a
    gap too small to separate) is flagged rather than mis-sorted.
    """
    words = list(words)
    N, n = len(words), rep.n
    partial = np.zeros((N, n + 1))
    sign_partial = np.ones((N, n + 1))
    healthy = np.ones(N, dtype=bool)
    for k in range(1, n):
        top_log, sign, converged = _cycle_power_top(rep, words, k)
        healthy &= converged
        partial[:, k] = top_log
        sign_partial[:, k] = sign
    for i, w in enumerate(words):
        sign_partial[i, n], partial[i, n] = rep.word_det(w)
    return _assemble(partial, sign_partial, healthy.copy(), healthy.copy(),
                     gap_tol)


def ladders_from_levels(level_mats, level_logs, det_signs, det_logs,
                        gap_tol: float = DEFAULT.gap_tol,
                        imag_tol: float = DEFAULT.eigen_imag_rel) -> LogEigenBatch:
    """Assemble ladders from per-level stacked exterior-power products.

    ``level_mats[k-1]`` holds normalized images under the k-th exterior
    power, ``level_logs[k-1]`` their log factors.  Dominant eigenvalues
    are read off directly, which is accurate while each product's norm
    tracks its spectral radius (true for incrementally renormalized
    powers); word images in general should go through
    :func:`word_ladders`.
    """
    n = len(level_mats) + 1
    N = level_mats[0].shape[0]
    partial = np.zeros((N, n + 1))
    sign_partial = np.ones((N, n + 1))
    real_ok = np.ones(N, dtype=bool)
    gap_ok = np.ones(N, dtype=bool)
    for k in range(1, n):
        mu, gap = _dominant_pair(level_mats[k - 1])
        real_ok &= np.abs(mu.imag) <= imag_tol * np.abs(mu)
        gap_ok &= gap > gap_tol
        partial[:, k] = np.log(np.abs(mu)) + level_logs[k - 1]
        sign_partial[:, k] = np.where(mu.real < 0, -1.0, 1.0)
    partial[:, n] = det_logs
    sign_partial[:, n] = det_signs
    return _assemble(partial, sign_partial, real_ok, gap_ok, gap_tol)


def log_eigen_batch(mats: np.ndarray, log_scales: np.ndarray,
                    gap_tol: float = DEFAULT.gap_tol,
                    imag_tol: float = DEFAULT.eigen_imag_rel,
                    det_logs: np.ndarray | None = None,
                    det_signs: np.ndarray | None = None) -> LogEigenBatch:
    """Ladders straight from composite matrices.

    Valid while the spectrum of each ``exp(log_scales[i]) * mats[i]``
    stays within machine range of its top; beyond that, use
    :func:`word_ladders`, which never forms minors of a composite product.
    """
    mats = np.asarray(mats, dtype=float)
    log_scales = np.asarray(log_scales, dtype=float)
    n = mats.shape[-1]
    level_mats = [ext_power_batch(mats, k) for k in range(1, n)]
    level_logs = []
    for k, level in enumerate(level_mats, start=1):
        logs = k * log_scales.copy()
        _renormalize_stack(level, logs)
        level_logs.append(logs)
    if det_logs is None:
        det_signs, det_logs = np.linalg.slogdet(mats)
        det_logs = det_logs + n * log_scales
    return ladders_from_levels(level_mats, level_logs, det_signs, det_logs,
                               gap_tol, imag_tol)


@dataclass(frozen=True)
class EigenData:
    """Eigen data of one matrix, indexed by decreasing absolute value."""

    log_magnitudes: np.ndarray   # (n,) strictly decreasing
    signs: np.ndarray            # (n,)
    eigenlines: np.ndarray       # (n, n); row i-1 is the unit eigenline of lambda_i

    @property
    def n(self) -> int:
        return self.log_magnitudes.shape[0]


def _unit_real_lines(eigvec_columns: np.ndarray) -> np.ndarray:
    lines = np.real(eigvec_columns.T).copy()
    for row in lines:
        norm = np.linalg.norm(row)
        if norm == 0.0:
            raise DegenerateSpectrumError("zero eigenvector returned")
        row /= norm
        lead = np.argmax(np.abs(row))
        if row[lead] < 0:
            row *= -1.0
    return lines


def sorted_eigenlines(sm: ScaledMatrix) -> np.ndarray:
    """Unit real eigenlines of the matrix, sorted by decreasing |eigenvalue|.

    Lines are normalized with a positive leading component; accuracy
    degrades only for indices whose eigenvalue sits many orders below the
    top (beyond desk scale).
    """
    ev, vecs = np.linalg.eig(sm.matrix)
    order = np.argsort(-np.abs(ev))
    return _unit_real_lines(vecs[:, order])


def raise_if_degenerate(batch: LogEigenBatch, gap_tol: float, index: int = 0):
    if not batch.real_ok[index]:
        raise DegenerateSpectrumError(
            "complex eigenvalues beyond tolerance; not Hitchin-like")
    if not batch.gap_ok[index]:
        raise DegenerateSpectrumError(
            f"log-magnitude gap below {gap_tol:g}; numerically degenerate")


def word_eigen(rep: SurfaceRep, w: Word,
               gap_tol: float = DEFAULT.gap_tol,
               imag_tol: float = DEFAULT.eigen_imag_rel) -> EigenData:
    """Full eigen data for the image of a word: exact ladder plus eigenlines."""
    batch = word_ladders(rep, [w], gap_tol=gap_tol, imag_tol=imag_tol)
    raise_if_degenerate(batch, gap_tol)
    from .reps import evaluate
    lines = sorted_eigenlines(evaluate(rep, w))
    return EigenData(batch.log_magnitudes[0], batch.signs[0], lines)


def eigen_sorted(sm: ScaledMatrix, gap_tol: float = DEFAULT.gap_tol,
                 imag_tol: float = DEFAULT.eigen_imag_rel,
                 det: tuple | None = None) -> EigenData:
    """Sorted eigen data of one represented matrix.

    Raises :class:`DegenerateSpectrumError` when the spectrum has complex
    parts above tolerance or consecutive log-magnitude gaps below
    ``gap_tol``.  Ladder accuracy is subject to the composite-matrix
    limits described in the module docstring; for images of words prefer
    :func:`word_eigen`.  Pass the represented determinant as
    ``det=(sign, log)`` when known.
    """
    det_logs = det_signs = None
    if det is not None:
        det_signs = np.array([det[0]])
        det_logs = np.array([det[1]])
    batch = log_eigen_batch(sm.matrix[None, :, :], np.array([sm.log_scale]),
                            gap_tol=gap_tol, imag_tol=imag_tol,
                            det_logs=det_logs, det_signs=det_signs)
    raise_if_degenerate(batch, gap_tol)
    return EigenData(batch.log_magnitudes[0], batch.signs[0],
                     sorted_eigenlines(sm))

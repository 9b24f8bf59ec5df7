"""Representations of the genus-2 surface group into SL(n, R).

Provides the regular-octagon Fuchsian base point, symmetric-power lifts,
overflow-free word evaluation through :class:`ScaledMatrix`, validation
against the relator and the real-gapped-spectrum property, Newton
deformation along the relator variety, and JSON persistence.

A note on relator residuals: the relator product telescopes through
intermediate factors of norm up to ``K = max_j |prefix_j| * |suffix_j|``,
so the computable deviation of the product from the identity carries an
unavoidable floating-point floor of roughly ``K * eps`` even for an exact
representation.  Residuals here are therefore reported relative to ``K``;
the raw max-entry deviation is kept alongside for reference.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import tempfile
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .config import DEFAULT, Tolerances
from .words import (ConjugacyClass, Presentation, Word, enumerate_classes,
                    LETTER_NAMES)

GENERATOR_KEYS = ("a1", "b1", "a2", "b2")

# half-trace of the octagon side pairings: cosh of half the translation length
_COSH_HALF = 1.0 + math.sqrt(2.0)
OCTAGON_TRANSLATION_LENGTH = 2.0 * math.acosh(_COSH_HALF)


class RepresentationError(Exception):
    """Determinant, relator or schema violation."""


class NewtonDivergenceError(RepresentationError):
    """Relator projection did not converge; try a smaller epsilon."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScaledMatrix:
    """A matrix with an additive log factor: represents ``exp(log_scale) * matrix``.

    The stored matrix is kept with max absolute entry in [1/2, 1) by
    power-of-two rescaling, which is exact in binary floating point.
    """

    matrix: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def of(cls, matrix, log_scale: float = 0.0) -> "ScaledMatrix":
        matrix = np.asarray(matrix, dtype=float)
        peak = np.abs(matrix).max()
        if not np.isfinite(peak) or peak == 0.0:
            raise ValueError("zero or non-finite matrix cannot be scaled")
        _, e = math.frexp(peak)
        return cls(_readonly(matrix / 2.0 ** e), log_scale + e * math.log(2.0))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def compose(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return ScaledMatrix.of(self.matrix @ other.matrix,
                               self.log_scale + other.log_scale)

    def represented(self) -> np.ndarray:
        """The represented matrix itself; only sensible at moderate scale."""
        if abs(self.log_scale) > 500.0:
            raise OverflowError("represented matrix out of double range")
        return self.matrix * math.exp(self.log_scale)

    def distance_to_identity(self) -> float:
        """max-entry distance to the nearer of +Id / -Id (inf when far)."""
        if abs(self.log_scale) > 2.0:
            return math.inf
        R = self.matrix * math.exp(self.log_scale)
        eye = np.eye(self.n)
        return min(np.abs(R - eye).max(), np.abs(R + eye).max())

    def close_to(self, other: "ScaledMatrix", tol: float) -> bool:
        """Whether the represented matrices agree up to sign, relative tolerance."""
        if abs(self.log_scale - other.log_scale) > 1.0:
            return False
        scale = math.exp(other.log_scale - self.log_scale)
        B = other.matrix * scale
        ref = np.abs(self.matrix).max()
        return bool(min(np.abs(self.matrix - B).max(),
                        np.abs(self.matrix + B).max()) <= tol * ref)


@dataclass(frozen=True)
class SurfaceRep:
    """Four unit-determinant generator images plus the presentation."""

    n: int
    generator_images: tuple
    presentation: Presentation
    provenance: str = "user"

    def __post_init__(self):
        mats = tuple(_readonly(m) for m in self.generator_images)
        if len(mats) != 4 or any(m.shape != (self.n, self.n) for m in mats):
            raise RepresentationError("expected four n x n generator images")
        object.__setattr__(self, "generator_images", mats)
        for key, m in zip(GENERATOR_KEYS, mats):
            err = abs(np.linalg.det(m) - 1.0)
            if err > DEFAULT.det_tol:
                raise RepresentationError(
                    f"det({key}) deviates from 1 by {err:.3e}")
        res = relator_residual(mats, self.presentation.relator)
        if res > DEFAULT.relator_load:
            raise RepresentationError(
                f"relator residual {res:.3e} exceeds {DEFAULT.relator_load:.0e}")

    @cached_property
    def generator_inverses(self) -> tuple:
        out = []
        eye = np.eye(self.n)
        for key, m in zip(GENERATOR_KEYS, self.generator_images):
            if self.n == 2:
                inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
            else:
                try:
                    inv = np.linalg.solve(m, eye)
                except np.linalg.LinAlgError as exc:
                    raise RepresentationError(
                        f"singular generator image {key}") from exc
            if np.abs(m @ inv - eye).max() > DEFAULT.inverse_residual:
                raise RepresentationError(
                    f"inverse solve for {key} beyond residual tolerance")
            out.append(_readonly(inv))
        return tuple(out)

    def letter_image(self, letter: int) -> np.ndarray:
        if letter >= 4:
            return self.generator_inverses[letter & 3]
        return self.generator_images[letter]

    @cached_property
    def letter_det_data(self) -> tuple:
        """Per-letter (sign, log|det|) pairs; word determinants accumulate
        from these rather than from the composite product, whose direct
        determinant underflows for long words."""
        signs = np.empty(8)
        logs = np.empty(8)
        for v in range(8):
            signs[v], logs[v] = np.linalg.slogdet(self.letter_image(v))
        return signs, logs

    def word_det(self, w: Word) -> tuple:
        """(sign, log|det|) of the image of a word."""
        signs, logs = self.letter_det_data
        sign, log = 1.0, 0.0
        for v in w.letters:
            sign *= signs[v]
            log += logs[v]
        return sign, log


def _relator_chain(mats, relator: Word):
    """Prefix/suffix products along the relator and the conditioning factor."""
    n = mats[0].shape[0]
    invs = [np.linalg.inv(m) for m in mats]
    factors = [mats[v & 3] if v < 4 else invs[v & 3] for v in relator.letters]
    prefixes = [np.eye(n)]
    for f in factors:
        prefixes.append(prefixes[-1] @ f)
    suffixes = [np.eye(n)]
    for f in reversed(factors):
        suffixes.append(f @ suffixes[-1])
    suffixes.reverse()
    amp = max(np.abs(p).max() * np.abs(s).max()
              for p, s in zip(prefixes, suffixes))
    return prefixes, suffixes, invs, amp


def relator_residual(mats, relator: Word, raw: bool = False) -> float:
    """Deviation of the relator product from ±Id, in max-entry norm.

    By default the deviation is divided by the conditioning factor of the
    product (see module docstring); pass ``raw=True`` for the plain value.
    """
    prefixes, _, _, amp = _relator_chain(mats, relator)
    R = prefixes[-1]
    eye = np.eye(R.shape[0])
    dev = min(np.abs(R - eye).max(), np.abs(R + eye).max())
    return dev if raw else dev / max(amp, 1.0)


def evaluate(rep: SurfaceRep, w: Word) -> ScaledMatrix:
    """Image of a word under the representation, renormalized per letter."""
    out = ScaledMatrix.of(np.eye(rep.n))
    for letter in w.letters:
        out = ScaledMatrix.of(out.matrix @ rep.letter_image(letter),
                              out.log_scale)
    return out


# ---------------------------------------------------------------------------
# octagon Fuchsian construction


def _rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def _octagon_generators() -> list:
    """Side pairings of the regular hyperbolic octagon (all angles pi/4).

    Each pairing is a hyperbolic translation of length
    ``2*arccosh(1+sqrt(2))`` whose axis passes through the octagon centre
    at angle ``k*pi/4``: conjugates of a diagonal translation by rotations
    about the centre.
    """
    half = OCTAGON_TRANSLATION_LENGTH / 2.0
    T = np.diag([math.exp(half), math.exp(-half)])
    out = []
    for k in range(4):
        R = _rotation(k * math.pi / 8.0)
        out.append(R @ T @ R.T)
    return out


def _find_octagon_relator(mats, tol: float) -> Word:
    """Search the side-identification pattern for the length-8 relator.

    Opposite sides of the octagon are identified, so the boundary word
    visits the generators in cyclic order 0,1,2,3,0,1,2,3; only the signs
    are unknown.  Candidates are screened against the matrices and the
    surviving cyclic word is returned in canonical rotation.
    """
    invs = [np.linalg.inv(m) for m in mats]
    eye = np.eye(mats[0].shape[0])
    hits = set()
    for signs in itertools.product((1, -1), repeat=8):
        M = eye
        for pos, sign in enumerate(signs):
            k = pos % 4
            M = M @ (mats[k] if sign == 1 else invs[k])
        if min(np.abs(M - eye).max(), np.abs(M + eye).max()) <= tol:
            letters = tuple((pos % 4) + (0 if sign == 1 else 4)
                            for pos, sign in enumerate(signs))
            hits.add(min(Word(letters).rotations(),
                         key=lambda r: r.letters).letters)
    if len(hits) != 1:
        raise RepresentationError(
            f"octagon relator search found {len(hits)} candidates")
    return Word(hits.pop())


def build_octagon_fuchsian(tolerances: Tolerances = DEFAULT) -> SurfaceRep:
    """The discrete faithful SL(2,R) representation of the regular-octagon surface."""
    mats = _octagon_generators()
    relator = _find_octagon_relator(mats, tolerances.relator_build)
    rep = SurfaceRep(2, tuple(mats), Presentation(relator), "octagon-fuchsian")
    res = relator_residual(rep.generator_images, relator)
    if res > tolerances.relator_build:
        raise RepresentationError(f"octagon build residual {res:.3e}")
    return rep


# ---------------------------------------------------------------------------
# symmetric powers


def sym_power_matrix(A: np.ndarray, n_target: int) -> np.ndarray:
    """Degree-(n_target-1) symmetric power of a 2x2 matrix.

    Acts on the monomial basis ``x^(n-1-k) y^k``; column k holds the
    coefficients of ``(a x + c y)^(n-1-k) (b x + d y)^k``.
    """
    a, b = A[0, 0], A[0, 1]
    c, d = A[1, 0], A[1, 1]
    n = n_target
    out = np.empty((n, n))
    for k in range(n):
        p = n - 1 - k
        first = np.array([comb(p, s) * a ** (p - s) * c ** s
                          for s in range(p + 1)])
        second = np.array([comb(k, t) * b ** (k - t) * d ** t
                           for t in range(k + 1)])
        out[:, k] = np.convolve(first, second)
    return out


def sym_power_lift(r: SurfaceRep, n_target: int) -> SurfaceRep:
    """Compose a 2-dimensional representation with the irreducible
    SL(2) -> SL(n) embedding, yielding an n-Fuchsian point."""
    if r.n != 2:
        raise RepresentationError("symmetric power lift starts from n = 2")
    if not 2 <= n_target <= 12:
        raise RepresentationError("target dimension must lie in 2..12")
    if n_target == 2:
        return r
    mats = tuple(sym_power_matrix(m, n_target) for m in r.generator_images)
    return SurfaceRep(n_target, mats, r.presentation, "sym-power-lift")


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    relator_residual: float
    relator_residual_raw: float
    word_problem_ok: bool
    eigen_real_ok: bool
    min_log_gap: float
    sample_size: int
    tol: float

    @property
    def hitchin_plausible(self) -> bool:
        return (self.word_problem_ok and self.eigen_real_ok
                and self.min_log_gap > 0.0
                and self.relator_residual <= DEFAULT.relator_load)

    def summary(self) -> str:
        verdict = "hitchin-plausible" if self.hitchin_plausible else "rejected"
        return (f"relator residual {self.relator_residual:.3e} "
                f"(raw {self.relator_residual_raw:.3e}), "
                f"word problem {'ok' if self.word_problem_ok else 'VIOLATED'}, "
                f"real spectra {'ok' if self.eigen_real_ok else 'VIOLATED'}, "
                f"min log gap {self.min_log_gap:.6g} "
                f"over {self.sample_size} words -> {verdict}")


def validate(rep: SurfaceRep, sample_words, tol: float | None = None,
             tolerances: Tolerances = DEFAULT) -> ValidationReport:
    """Check the relator, desk-scale faithfulness and the gapped real
    spectrum over a sample of nontrivial words."""
    from .eigen import word_ladders

    sample = [w for w in sample_words if w]
    if not sample:
        raise ValueError("sample_words must contain nontrivial words")
    tol = tolerances.eigen_imag_rel if tol is None else tol

    res = relator_residual(rep.generator_images, rep.presentation.relator)
    raw = relator_residual(rep.generator_images, rep.presentation.relator,
                           raw=True)

    word_problem_ok = True
    for w in sample:
        if evaluate(rep, w).distance_to_identity() <= tolerances.near_identity_tol:
            word_problem_ok = False
            break

    data = word_ladders(rep, sample, gap_tol=0.0, imag_tol=tol)
    eigen_real_ok = bool(data.real_ok.all())
    gaps = data.log_magnitudes[:, :-1] - data.log_magnitudes[:, 1:]
    min_log_gap = float(gaps.min()) if rep.n > 1 else math.inf
    return ValidationReport(res, raw, word_problem_ok, eigen_real_ok,
                            min_log_gap, len(sample), tol)


def default_sample(max_len: int = 4) -> list:
    return [c.representative for c in enumerate_classes(max_len)]


# ---------------------------------------------------------------------------
# Newton deformation along the relator variety


def _relator_jacobian_block(prefixes, suffixes, invs, mats, relator, g):
    """d(relator product)/d(xi) for the multiplicative update M_g (I + xi).

    Row index flattens the product entry (i, k); column index flattens the
    update entry (a, b).  A positive occurrence contributes
    P M_g E_ab S, an inverse occurrence -P E_ab M_g^-1 S.
    """
    n = mats[0].shape[0]
    block = np.zeros((n * n, n * n))
    for j, v in enumerate(relator.letters):
        if (v & 3) != g:
            continue
        P, S = prefixes[j], suffixes[j + 1]
        if v < 4:
            PB = P @ mats[g]
            block += np.einsum("ia,bk->ikab", PB, S).reshape(n * n, n * n)
        else:
            IS = invs[g] @ S
            block -= np.einsum("ia,bk->ikab", P, IS).reshape(n * n, n * n)
    return block


def _project_det(M: np.ndarray) -> np.ndarray:
    d = np.linalg.det(M)
    if not np.isfinite(d) or d <= 0.25:
        raise NewtonDivergenceError(
            "determinant collapsed during deformation; use a smaller epsilon")
    return M / d ** (1.0 / M.shape[0])


def deform(rep: SurfaceRep, seed: int, epsilon: float,
           tolerances: Tolerances = DEFAULT, max_iter: int = 50) -> SurfaceRep:
    """Seeded random deformation projected back onto the relator variety.

    The first three generator images receive additive perturbations of
    max-entry size ``epsilon`` (then unit-determinant projection); the
    relator equation is re-solved by damped Gauss-Newton acting jointly on
    the third and fourth images in multiplicative coordinates.  Solving for
    the fourth image alone is infeasible: its occurrences in the relator
    are conjugation-shaped, which pins the characteristic polynomial of a
    fixed word in the other three and is violated at first order by a
    generic perturbation.
    """
    scale = min(np.abs(m).max() for m in rep.generator_images)
    if epsilon < 0 or epsilon > 0.05 * scale:
        raise ValueError("epsilon must lie in [0, 0.05 * generator entry scale]")
    rng = np.random.default_rng(seed)
    relator = rep.presentation.relator
    n = rep.n
    eye = np.eye(n)

    mats = [m.copy() for m in rep.generator_images]
    for k in range(3):
        P = rng.standard_normal((n, n))
        peak = np.abs(P).max()
        if epsilon > 0 and peak > 0:
            mats[k] = _project_det(mats[k] + P * (epsilon / peak))

    free = (2, 3)
    current = [m.copy() for m in mats]
    target = tolerances.relator_deform
    for _ in range(max_iter):
        prefixes, suffixes, invs, amp = _relator_chain(current, relator)
        R = prefixes[-1]
        sign = 1.0 if np.abs(R - eye).max() <= np.abs(R + eye).max() else -1.0
        F = (R - sign * eye).ravel() / amp
        if np.abs(F).max() <= target:
            break
        J = np.zeros((n * n, len(free) * n * n))
        for col, g in enumerate(free):
            J[:, col * n * n:(col + 1) * n * n] = _relator_jacobian_block(
                prefixes, suffixes, invs, current, relator, g) / amp
        step, *_ = np.linalg.lstsq(J, -F, rcond=1e-13)
        norm_F = np.linalg.norm(F)
        t = 1.0
        while t > 1e-14:
            try:
                trial = list(current)
                for col, g in enumerate(free):
                    xi = t * step[col * n * n:(col + 1) * n * n].reshape(n, n)
                    trial[g] = _project_det(current[g] @ (eye + xi))
            except NewtonDivergenceError:
                t *= 0.5
                continue
            prefixes_t, _, _, amp_t = _relator_chain(trial, relator)
            Rt = prefixes_t[-1]
            Ft = (Rt - sign * eye).ravel() / amp_t
            if np.isfinite(Ft).all() and np.linalg.norm(Ft) < (1 - 1e-4 * t) * norm_F:
                current = trial
                break
            t *= 0.5
        else:
            break
    res = relator_residual(current, relator)
    if res > target:
        raise NewtonDivergenceError(
            f"relator projection stalled at residual {res:.3e} "
            f"(target {target:.0e}); use a smaller epsilon")
    return SurfaceRep(n, tuple(current), rep.presentation, "deformed")


# ---------------------------------------------------------------------------
# persistence

_PROVENANCES = ("octagon-fuchsian", "sym-power-lift", "user", "deformed")


def save_rep(rep: SurfaceRep, path) -> None:
    doc = {
        "n": rep.n,
        "generators": {key: [float(x) for x in m.ravel()]
                       for key, m in zip(GENERATOR_KEYS, rep.generator_images)},
        "relator": str(rep.presentation.relator),
        "provenance": rep.provenance,
    }
    text = json.dumps(doc, indent=2)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_rep(path, tolerances: Tolerances = DEFAULT) -> SurfaceRep:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RepresentationError(f"cannot read representation file: {exc}")
    try:
        n = int(doc["n"])
        relator = Word.parse(doc["relator"])
        provenance = doc.get("provenance", "user")
        gens = []
        for key in GENERATOR_KEYS:
            entries = doc["generators"][key]
            if len(entries) != n * n:
                raise RepresentationError(
                    f"generator {key}: expected {n * n} entries")
            gens.append(np.array(entries, dtype=float).reshape(n, n))
    except (KeyError, TypeError, ValueError) as exc:
        raise RepresentationError(f"malformed representation file: {exc}")
    if provenance not in _PROVENANCES:
        raise RepresentationError(f"unknown provenance {provenance!r}")
    for key, m in zip(GENERATOR_KEYS, gens):
        err = abs(np.linalg.det(m) - 1.0)
        if err > tolerances.det_tol:
            raise RepresentationError(
                f"det({key}) = 1 violated by {err:.3e}")
    res = relator_residual(gens, relator)
    if res > tolerances.relator_load:
        raise RepresentationError(
            f"relator residual {res:.3e} exceeds load tolerance "
            f"{tolerances.relator_load:.0e}")
    return SurfaceRep(n, tuple(gens), Presentation(relator), provenance)


# ---------------------------------------------------------------------------
# desk-scale faithfulness sweep


def scan_near_identity(rep: SurfaceRep, max_len: int,
                       tol: float = DEFAULT.near_identity_tol) -> list:
    """All freely reduced words of length <= max_len mapping within tol of ±Id.

    Breadth-first sweep over the free-group ball with stacked renormalized
    products; for a faithful representation the hits are exactly the empty
    word and the freely reduced relator conjugates in range.
    """
    n = rep.n
    ln2 = math.log(2.0)
    images = [rep.letter_image(v) for v in range(8)]
    eye = np.eye(n)

    hits = []
    mats = np.eye(n)[None, :, :]
    logs = np.zeros(1)
    last = np.array([-1])
    trail = np.zeros((1, 0), dtype=np.int8)

    for level in range(1, max_len + 1):
        keep = level < max_len
        new_mats, new_logs, new_last, new_trails = [], [], [], []
        for v in range(8):
            ok = last != (v ^ 4)
            if not ok.any():
                continue
            prod = mats[ok] @ images[v]
            peak = np.abs(prod).max(axis=(1, 2))
            exps = np.frexp(peak)[1]
            prod /= 2.0 ** exps[:, None, None]
            lg = logs[ok] + exps * ln2
            sub_trail = np.concatenate(
                [trail[ok], np.full((int(ok.sum()), 1), v, dtype=np.int8)],
                axis=1)
            near = np.abs(lg) < 2.0
            if near.any():
                R = prod[near] * np.exp(lg[near])[:, None, None]
                d = np.minimum(np.abs(R - eye).max(axis=(1, 2)),
                               np.abs(R + eye).max(axis=(1, 2)))
                near_rows = np.nonzero(near)[0]
                for idx in np.nonzero(d <= tol)[0]:
                    letters = sub_trail[near_rows[idx]]
                    hits.append(Word(tuple(int(x) for x in letters)))
            if keep:
                new_mats.append(prod)
                new_logs.append(lg)
                new_last.append(np.full(int(ok.sum()), v))
                new_trails.append(sub_trail)
        if keep:
            mats = np.concatenate(new_mats)
            logs = np.concatenate(new_logs)
            last = np.concatenate(new_last)
            trail = np.concatenate(new_trails)
    return hits

"""Length vectors of curve classes: identities, orbit integrals, spectra.

For a word w the vector ``(l_1, ..., l_n)`` collects the logs of the
eigenvalue magnitudes of its image, sorted strictly decreasing.  The
entries sum to zero (unit determinant) and obey the inverse flip
``l_i(w^-1) = -l_{n+1-i}(w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .eigen import DegenerateSpectrumError, word_eigen, word_ladders
from .reps import ScaledMatrix, SurfaceRep, evaluate
from .words import ConjugacyClass, Word, conjugacy_class, enumerate_classes


@dataclass(frozen=True)
class LengthVector:
    """values[i-1] = l_i; strictly decreasing, summing to ~0."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        n = v.size
        if np.any(np.diff(v) >= 0):
            raise ValueError("length vector must be strictly decreasing")
        if abs(v.sum()) > 1e-8 * n:
            raise ValueError(f"length vector sum {v.sum():.3e} too far from 0")

    @property
    def n(self) -> int:
        return self.values.size

    def entry(self, i: int) -> float:
        """l_i with the usual 1-based subscript."""
        if not 1 <= i <= self.n:
            raise IndexError(f"index {i} outside 1..{self.n}")
        return float(self.values[i - 1])


def length_vector(rep: SurfaceRep, w: Word,
                  tolerances: Tolerances = DEFAULT) -> LengthVector:
    w = w.cyclic_reduce()
    if not w:
        raise ValueError("length vector of the identity is undefined")
    data = word_eigen(rep, w, gap_tol=tolerances.gap_tol,
                      imag_tol=tolerances.eigen_imag_rel)
    return LengthVector(data.log_magnitudes)


def lengths_batch(rep: SurfaceRep, words,
                  tolerances: Tolerances = DEFAULT):
    """Length vectors for many words at once.

    Returns ``(values, ok)`` where values has one row per word and ok
    flags rows with a clean real gapped spectrum.
    """
    batch = word_ladders(rep, words, gap_tol=tolerances.gap_tol,
                         imag_tol=tolerances.eigen_imag_rel)
    return batch.log_magnitudes, batch.ok


def thurston_length(rep2: SurfaceRep, w: Word) -> float:
    """Half the log of the top eigenvalue magnitude in the 2-dimensional case.

    With the trace normalization used here (``tr = 2 cosh(L/2)``) the
    translation length of the isometry is ``2 log|lambda_1|``, so this
    classical normalization is a quarter of the translation length.
    """
    if rep2.n != 2:
        raise ValueError("thurston_length requires a 2-dimensional representation")
    lv = length_vector(rep2, w)
    return 0.5 * lv.entry(1)


def eigenline_flip_check(rep: SurfaceRep, w: Word,
                         tol: float = 1e-8) -> bool:
    """Whether eigenlines of w^-1 are those of w with reversed indices.

    True iff for all i the i-th eigenline of the image of ``w^-1`` and the
    (n+1-i)-th eigenline of the image of ``w`` align to ``1 - tol``.
    """
    w = w.cyclic_reduce()
    if not w:
        raise ValueError("flip check of the identity is undefined")
    fwd = word_eigen(rep, w)
    bwd = word_eigen(rep, w.inverse())
    n = rep.n
    for i in range(n):
        u = bwd.eigenlines[i]
        v = fwd.eigenlines[n - 1 - i]
        if abs(float(np.dot(u, v))) < 1.0 - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# metric-weighted orbit integral


@dataclass(frozen=True)
class FibreMetric:
    """Inner product on the fibre R^n, as a symmetric positive matrix."""

    gram: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=float)
        if np.abs(g - g.T).max() > 1e-12:
            raise ValueError("gram matrix must be symmetric")
        if np.linalg.eigvalsh(g).min() <= 0:
            raise ValueError("gram matrix must be positive definite")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)

    @classmethod
    def identity(cls, n: int) -> "FibreMetric":
        return cls(np.eye(n))

    @classmethod
    def random(cls, n: int, seed: int) -> "FibreMetric":
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, n))
        return cls(A @ A.T + 0.1 * np.eye(n))

    def norm(self, v: np.ndarray) -> float:
        return math.sqrt(float(v @ self.gram @ v))


def orbit_increments(rep: SurfaceRep, w: Word, i: int,
                     metric: FibreMetric) -> np.ndarray:
    """Per-letter decrements of the transported eigenline log-norm.

    Walking the closed orbit of a cyclically reduced w, the i-th eigenline
    vector is pulled back letter by letter; each step contributes minus
    the change of its metric log-norm.  Individual increments depend on
    the metric, but the telescoped total is ``l_i(w)`` for any metric.
    """
    w = w.cyclic_reduce()
    if not w:
        raise ValueError("orbit integral of the identity is undefined")
    data = word_eigen(rep, w)
    v = data.eigenlines[i - 1]
    v = v / metric.norm(v)
    increments = np.empty(len(w))
    for j, letter in enumerate(w.letters):
        step = rep.letter_image(letter ^ 4) @ v
        norm = metric.norm(step)
        increments[j] = -math.log(norm)
        v = step / norm
    return increments


def orbit_integral(rep: SurfaceRep, w: Word, i: int,
                   metric: FibreMetric) -> float:
    return float(orbit_increments(rep, w, i, metric).sum())


# ---------------------------------------------------------------------------
# identity report


@dataclass(frozen=True)
class IdentityReport:
    n: int
    n_classes: int
    max_sum_violation: float
    max_flip_violation: float
    sum_tol: float
    flip_tol: float

    @property
    def passed(self) -> bool:
        return (self.max_sum_violation <= self.sum_tol
                and self.max_flip_violation <= self.flip_tol)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"{self.n_classes} classes at n={self.n}: "
                f"max |sum_i l_i| = {self.max_sum_violation:.3e} "
                f"(tol {self.sum_tol:.1e}), "
                f"max flip violation = {self.max_flip_violation:.3e} "
                f"(tol {self.flip_tol:.1e}) -> {status}")


def identity_report(rep: SurfaceRep, classes,
                    tolerances: Tolerances = DEFAULT) -> IdentityReport:
    """Check the sum-zero and inverse-flip identities over curve classes."""
    classes = list(classes)
    if not classes:
        raise ValueError("no classes supplied")
    fwd_words = [c.representative for c in classes]
    bwd_words = [w.inverse() for w in fwd_words]
    fwd, ok_f = lengths_batch(rep, fwd_words, tolerances)
    bwd, ok_b = lengths_batch(rep, bwd_words, tolerances)
    if not (ok_f.all() and ok_b.all()):
        raise DegenerateSpectrumError("degenerate spectrum in identity sweep")
    sum_violation = float(np.abs(fwd.sum(axis=1)).max())
    flip_violation = float(np.abs(bwd + fwd[:, ::-1]).max())
    return IdentityReport(rep.n, len(classes), sum_violation, flip_violation,
                          1e-8 * rep.n, 1e-8)


# ---------------------------------------------------------------------------
# bounded spectrum with fingerprint + conjugacy merging


@dataclass(frozen=True)
class SpectrumEntry:
    cls: ConjugacyClass
    lengths: LengthVector
    merged: tuple = ()   # other free classes identified with cls

    @property
    def fingerprint(self) -> tuple:
        return tuple(self.lengths.values)


def _conjugator_words(rep: SurfaceRep) -> list:
    """Candidate conjugators for surface-relation coincidences.

    A relator replacement inside a cyclic word leaves the two canonical
    forms conjugate by the affix cancelled during cyclic reduction, which
    is always a short prefix of some rotation of the relator or its
    inverse; that prefix set is closed under inversion.  The identity is
    included so plain rotation alignment is covered.
    """
    cache = rep.__dict__.setdefault("_conjugator_words", None)
    if cache is None:
        rel = rep.presentation.relator
        seen = {()}
        out = [Word()]
        for base in (rel, rel.inverse()):
            for rot in base.rotations():
                for take in range(1, 6):
                    letters = rot.letters[:take]
                    if letters not in seen:
                        seen.add(letters)
                        out.append(Word(letters))
        rep.__dict__["_conjugator_words"] = out
        cache = out
    return cache


def _image_stack(rep: SurfaceRep, words) -> tuple:
    mats = np.empty((len(words), rep.n, rep.n))
    logs = np.empty(len(words))
    for i, w in enumerate(words):
        sm = evaluate(rep, w)
        mats[i], logs[i] = sm.matrix, sm.log_scale
    return mats, logs


def _relator_chunk_grams(rep: SurfaceRep, size: int = 3) -> frozenset:
    cache = rep.__dict__.get("_relator_grams")
    if cache is None:
        grams = set()
        for base in (rep.presentation.relator,
                     rep.presentation.relator.inverse()):
            letters = base.letters
            doubled = letters + letters
            for pos in range(len(letters)):
                grams.add(doubled[pos:pos + size])
        cache = frozenset(grams)
        rep.__dict__["_relator_grams"] = cache
    return cache


def _touches_relator(rep: SurfaceRep, c: ConjugacyClass, size: int = 3) -> bool:
    """Whether the cyclic word contains a length-3 relator chunk.

    Surface-relation coincidences between short cyclic words proceed by
    relator-chunk replacements, which leave such a chunk in at least one
    participant; words without one keep their own spectrum entry.
    """
    letters = c.representative.letters
    reps = -(-(len(letters) + size - 1) // len(letters))
    tiled = letters * reps
    grams = _relator_chunk_grams(rep, size)
    return any(tiled[pos:pos + size] in grams for pos in range(len(letters)))


def _conjugator_images(rep: SurfaceRep) -> tuple:
    cache = rep.__dict__.get("_conjugator_images")
    if cache is None:
        words = _conjugator_words(rep)
        U, u_logs = _image_stack(rep, words)
        Ui, ui_logs = _image_stack(rep, [w.inverse() for w in words])
        cache = (U, Ui, u_logs + ui_logs)
        rep.__dict__["_conjugator_images"] = cache
    return cache


def _conjugated_images(rep: SurfaceRep, c: ConjugacyClass) -> tuple:
    """Images of u * rot * u^-1 over rotations and candidate conjugators."""
    R, r_logs = _image_stack(rep, c.representative.rotations())
    U, Ui, pair_logs = _conjugator_images(rep)
    prod = np.einsum("kab,rbc,kcd->krad", U, R, Ui, optimize=True)
    logs = (pair_logs[:, None] + r_logs[None, :]).ravel()
    mats = prod.reshape(-1, rep.n, rep.n)
    peak = np.abs(mats).max(axis=(1, 2))
    exps = np.frexp(peak)[1]
    mats /= 2.0 ** exps[:, None, None]
    logs += exps * math.log(2.0)
    return mats, logs


def _any_image_match(a_mats, a_logs, b_mats, b_logs, tol: float) -> bool:
    ds = a_logs[:, None] - b_logs[None, :]
    near = np.abs(ds) <= 0.5
    if not near.any():
        return False
    ai, bj = np.nonzero(near)
    scaled = b_mats[bj] * np.exp(-ds[ai, bj])[:, None, None]
    ref = np.abs(a_mats[ai]).max(axis=(1, 2))
    d_plus = np.abs(a_mats[ai] - scaled).max(axis=(1, 2))
    d_minus = np.abs(a_mats[ai] + scaled).max(axis=(1, 2))
    return bool((np.minimum(d_plus, d_minus) <= tol * ref).any())


def _group_conjugate(rep, rot_cache, conj_cache, a: ConjugacyClass,
                     b: ConjugacyClass, tol: float) -> bool:
    """Faithful-representation conjugacy oracle.

    Compares the rotation images of one class against the conjugated
    images of the other under the candidate conjugators.  A matrix match
    certifies equality in the group by faithfulness (sound); the affix
    candidates make it complete for single relator replacements, and
    union-find transitivity extends that to chains.
    """
    if a not in rot_cache:
        rot_cache[a] = _image_stack(rep, a.representative.rotations())
    if b not in conj_cache:
        conj_cache[b] = _conjugated_images(rep, b)
    a_mats, a_logs = rot_cache[a]
    b_mats, b_logs = conj_cache[b]
    return _any_image_match(a_mats, a_logs, b_mats, b_logs, tol)


def spectrum(rep: SurfaceRep, max_len: int,
             tolerances: Tolerances = DEFAULT) -> list:
    """Length spectrum over classes of bounded length, one entry per
    surface-group class, sorted by l_1 then by representative.

    Free classes whose fingerprints collide within tolerance are merged
    only when verified conjugate by the matrix oracle, so inverse pairs
    (equal spectra, distinct classes) stay separate.
    """
    classes = enumerate_classes(max_len)
    values, ok = lengths_batch(rep, [c.representative for c in classes],
                               tolerances)
    if not ok.all():
        bad = [str(c) for c, good in zip(classes, ok) if not good]
        raise DegenerateSpectrumError(
            f"degenerate spectrum for classes: {', '.join(bad[:5])}")

    order = sorted(range(len(classes)),
                   key=lambda i: (values[i, 0], classes[i].representative.letters))
    parent = list(range(len(classes)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rot_cache, conj_cache = {}, {}
    touches = [_touches_relator(rep, c) for c in classes]
    tol = tolerances.fingerprint_tol
    start = 0
    for pos in range(1, len(order) + 1):
        if (pos == len(order)
                or values[order[pos], 0] - values[order[pos - 1], 0] > tol):
            window = order[start:pos]
            cluster_reps = []
            for a in window:
                for b in cluster_reps:
                    if not (touches[a] or touches[b]):
                        continue
                    if np.abs(values[a] - values[b]).max() > tol:
                        continue
                    if find(a) == find(b):
                        continue
                    if _group_conjugate(rep, rot_cache, conj_cache,
                                        classes[a], classes[b],
                                        tolerances.conjugacy_match_tol):
                        parent[find(a)] = find(b)
                if all(find(a) != find(b) for b in cluster_reps):
                    cluster_reps.append(a)
            start = pos

    groups = {}
    for i in range(len(classes)):
        groups.setdefault(find(i), []).append(i)
    entries = []
    for members in groups.values():
        members.sort(key=lambda i: (len(classes[i].representative),
                                    classes[i].representative.letters))
        rep_idx = members[0]
        entries.append(SpectrumEntry(
            classes[rep_idx], LengthVector(values[rep_idx]),
            tuple(classes[i] for i in members[1:])))
    entries.sort(key=lambda e: (round(float(e.lengths.values[0]), 9),
                                e.cls.representative.letters))
    return entries


def spectrum_csv_lines(entries) -> list:
    n = entries[0].lengths.n if entries else 0
    header = "class,len," + ",".join(f"l{i}" for i in range(1, n + 1))
    lines = [header]
    for e in entries:
        nums = ",".join(format(x, ".12g") for x in e.lengths.values)
        lines.append(f"{e.cls},{len(e.cls)},{nums}")
    return lines

"""The eigenvalue estimate: log-ratio series and their limits.

For words alpha, beta the quantity ``l_i(alpha^m beta) - m * l_i(alpha)``
converges geometrically as m grows; its limit is the i-th length of the
limiting current of the family ``alpha^m beta - m alpha``, and its
exponential is the limit of the eigenvalue ratios
``lambda_i(alpha^m beta) / lambda_i(alpha)^m``.  The series is computed
with incremental renormalized products in every exterior power, one extra
multiplication per step and per power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .currents import CurrentCombo, current_length
from .eigen import evaluate_compound, ladders_from_levels, word_ladders
from .reps import ScaledMatrix, SurfaceRep
from .spectrum import lengths_batch
from .words import Word


@dataclass(frozen=True)
class RatioSeries:
    alpha: Word
    beta: Word
    n: int
    m_values: np.ndarray      # (M,) the exponents 1..m_max
    log_ratio: np.ndarray     # (n, M); NaN where invalid
    signs: np.ndarray         # (n, M); eigenvalue sign ratios
    valid: np.ndarray         # (M,)
    alpha_lengths: np.ndarray  # (n,)

    @property
    def m_max(self) -> int:
        return int(self.m_values[-1])


def _scaled_pow(base: ScaledMatrix, exponent: int) -> ScaledMatrix:
    result = ScaledMatrix.of(np.eye(base.n))
    square = base
    e = exponent
    while e:
        if e & 1:
            result = result.compose(square)
        square = square.compose(square)
        e >>= 1
    return result


def ratio_series(rep: SurfaceRep, alpha: Word, beta: Word, m_max: int,
                 tolerances: Tolerances = DEFAULT,
                 reanchor_every: int = 32) -> RatioSeries:
    """Series ``l_i(alpha^m beta) - m l_i(alpha)`` for m = 1..m_max.

    Entries where ``alpha^m beta`` is trivial or its spectrum degenerate
    are flagged invalid and left NaN.
    """
    if not alpha:
        raise ValueError("alpha must be nontrivial")
    if m_max < 8:
        raise ValueError("m_max must be at least 8")
    n = rep.n

    a_batch = word_ladders(rep, [alpha], tolerances.gap_tol,
                           tolerances.eigen_imag_rel)
    if not a_batch.ok[0]:
        raise ValueError("alpha has a degenerate spectrum")
    alpha_lengths = a_batch.log_magnitudes[0]
    alpha_signs = a_batch.signs[0]

    a_det_sign, a_det_log = rep.word_det(alpha)
    b_det_sign, b_det_log = rep.word_det(beta)
    powers = [evaluate_compound(rep, alpha, k) for k in range(1, n)]
    base_running = [evaluate_compound(rep, beta, k) for k in range(1, n)]
    running = list(base_running)

    m_values = np.arange(1, m_max + 1)
    sizes = [p.n for p in powers]
    level_mats = [np.empty((m_max, size, size)) for size in sizes]
    level_logs = [np.empty(m_max) for _ in sizes]
    nontrivial = np.zeros(m_max, dtype=bool)

    for m in m_values:
        if reanchor_every and m % reanchor_every == 0:
            running = [_scaled_pow(p, int(m)).compose(b)
                       for p, b in zip(powers, base_running)]
        else:
            running = [p.compose(u) for p, u in zip(powers, running)]
        col = m - 1
        nontrivial[col] = (running[0].distance_to_identity()
                           > tolerances.near_identity_tol)
        for k, u in enumerate(running):
            level_mats[k][col] = u.matrix
            level_logs[k][col] = u.log_scale

    det_logs = m_values * a_det_log + b_det_log
    det_signs = a_det_sign ** m_values * b_det_sign
    batch = ladders_from_levels(level_mats, level_logs, det_signs, det_logs,
                                tolerances.gap_tol, tolerances.eigen_imag_rel)
    valid = nontrivial & batch.ok
    log_ratio = np.where(valid, batch.log_magnitudes.T
                         - np.outer(alpha_lengths, m_values), np.nan)
    sign_powers = alpha_signs[:, None] ** (m_values[None, :] % 2)
    signs = np.where(valid, batch.signs.T * sign_powers, 0).astype(int)
    return RatioSeries(alpha, beta, n, m_values, log_ratio, signs, valid,
                       alpha_lengths)


# ---------------------------------------------------------------------------
# convergence analysis


@dataclass(frozen=True)
class ConvergenceReport:
    limit_estimate: np.ndarray   # (n,)
    ratio_limit: np.ndarray      # (n,) exp of the limit
    rate: np.ndarray             # (n,) geometric factor, NaN when undefined
    fit_correlation: np.ndarray  # (n,) |pearson r| of the decay fit
    tail_residual: np.ndarray    # (n,)
    burn_in: np.ndarray          # (n,) first m with monotone decay beyond
    converged: np.ndarray        # (n,) bool

    @property
    def all_converged(self) -> bool:
        return bool(self.converged.all())


def _aitken_limit(x: np.ndarray, exact_floor: float) -> float:
    if len(x) >= 3:
        d1 = x[-2] - x[-3]
        d2 = x[-1] - x[-2]
        denom = d2 - d1
        if abs(d2) > exact_floor and abs(denom) > 1e-14 * (abs(d1) + abs(d2)):
            return float(x[-1] - d2 * d2 / denom)
    return float(x[-1])


def convergence_report(series: RatioSeries,
                       tail_tol: float = DEFAULT.conv_tail_tol,
                       min_corr: float = DEFAULT.conv_min_corr,
                       exact_floor: float = DEFAULT.conv_exact_floor
                       ) -> ConvergenceReport:
    """Limits by Aitken extrapolation plus a geometric-decay fit.

    The decay rate is fitted on the later half of the diffs that still sit
    above the floating-point floor; once successive differences fall below
    ``exact_floor`` the series is treated as exactly converged and the
    last value is used directly.
    """
    ms = series.m_values[series.valid]
    if ms.size < 8:
        raise ValueError("need at least 8 valid series entries")
    n = series.n
    limit = np.empty(n)
    rate = np.full(n, np.nan)
    corr = np.full(n, np.nan)
    tail = np.empty(n)
    burn = np.zeros(n, dtype=int)
    conv = np.zeros(n, dtype=bool)
    for i in range(n):
        x = series.log_ratio[i, series.valid]
        diffs = np.abs(np.diff(x))
        tail[i] = diffs[-1]
        limit[i] = _aitken_limit(x, exact_floor)
        above = np.nonzero(diffs > exact_floor)[0]
        decays_cleanly = True
        if above.size >= 3:
            seg = above[above.size // 2:] if above.size >= 6 else above
            mm = ms[1:][seg].astype(float)
            ld = np.log(diffs[seg])
            slope, _ = np.polyfit(mm, ld, 1)
            r = np.corrcoef(mm, ld)[0, 1]
            rate[i] = math.exp(slope) if slope < 0 else math.nan
            corr[i] = abs(r)
            decays_cleanly = slope < 0 and abs(r) >= min_corr
        # burn-in: earliest point from which the above-floor decay is monotone
        b = 0
        for j in range(len(above) - 1, 0, -1):
            if diffs[above[j]] > diffs[above[j - 1]] * (1 + 1e-9):
                b = above[j]
                break
        burn[i] = int(ms[1:][b]) if above.size else int(ms[0])
        conv[i] = tail[i] <= tail_tol and decays_cleanly
    return ConvergenceReport(limit, np.exp(limit), rate, corr, tail, burn, conv)


# ---------------------------------------------------------------------------
# the derivative reading of the same series


@dataclass(frozen=True)
class DerivativeReport:
    series: RatioSeries
    max_deviation: float         # worst |combo route - series route|
    limits: np.ndarray           # (n,)
    sign_stable: np.ndarray      # (n,) late signs constant

    def summary(self) -> str:
        stable = "all stable" if bool(self.sign_stable.all()) else "NOT stable"
        return (f"derivative identity deviation {self.max_deviation:.3e}; "
                f"limits {np.array2string(self.limits, precision=9)}; "
                f"late eigenvalue signs {stable}")


def derivative_consistency(rep: SurfaceRep, alpha: Word, beta: Word,
                           m_max: int,
                           tolerances: Tolerances = DEFAULT) -> DerivativeReport:
    """Re-derive the log-ratio series through scaled curve combinations.

    The value ``m * (l_i((1/m) * [alpha^m beta]) - l_i(alpha))`` agrees
    with ``log_ratio[i][m]`` by homogeneity of the extended lengths; the
    report records the worst floating-point deviation between the two
    routes and the tail behaviour of the eigenvalue signs.
    """
    series = ratio_series(rep, alpha, beta, m_max, tolerances)
    a_vals, _ = lengths_batch(rep, [alpha], tolerances)
    deviation = 0.0
    for col, m in enumerate(series.m_values):
        if not series.valid[col]:
            continue
        word = (alpha ** int(m)) * beta
        combo = CurrentCombo.of_word(word, 1.0 / int(m))
        for i in range(1, rep.n + 1):
            via_combo = m * (current_length(rep, combo, i) - a_vals[0][i - 1])
            deviation = max(deviation,
                            abs(via_combo - series.log_ratio[i - 1, col]))
    report = convergence_report(series, tolerances.conv_tail_tol,
                                tolerances.conv_min_corr,
                                tolerances.conv_exact_floor)
    late = series.signs[:, series.valid][:, -4:]
    sign_stable = np.array([np.all(row == row[-1]) for row in late])
    return DerivativeReport(series, deviation, report.limit_estimate,
                            sign_stable)


# ---------------------------------------------------------------------------
# artifacts


def series_csv_lines(series: RatioSeries) -> list:
    lines = ["m,i,log_ratio,sign,diff"]
    prev = {}
    for col, m in enumerate(series.m_values):
        if not series.valid[col]:
            continue
        for i in range(series.n):
            x = series.log_ratio[i, col]
            diff = ""
            if i in prev:
                diff = format(x - prev[i], ".12g")
            prev[i] = x
            lines.append(f"{m},{i + 1},{format(x, '.12g')},"
                         f"{series.signs[i, col]},{diff}")
    return lines


def decay_svg(series: RatioSeries, width: int = 640, height: int = 400) -> str:
    """Line plot of log10 |successive difference| against m, one path per index."""
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#17becf", "#7f7f7f")
    margin = 46
    pts_by_index = []
    lo, hi = math.inf, -math.inf
    for i in range(series.n):
        pts = []
        for col in range(1, len(series.m_values)):
            if not (series.valid[col] and series.valid[col - 1]):
                continue
            d = abs(series.log_ratio[i, col] - series.log_ratio[i, col - 1])
            if d <= 0:
                continue
            y = math.log10(d)
            pts.append((int(series.m_values[col]), y))
            lo, hi = min(lo, y), max(hi, y)
        pts_by_index.append(pts)
    if not math.isfinite(lo):
        lo, hi = -1.0, 1.0
    if hi - lo < 1e-9:
        hi = lo + 1.0
    m_lo, m_hi = 1, series.m_max

    def sx(m):
        return margin + (m - m_lo) / max(m_hi - m_lo, 1) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - lo) / (hi - lo) * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
             f'y2="{height - margin}" stroke="black"/>',
             f'<text x="{width // 2}" y="{height - 10}" font-size="12" '
             f'text-anchor="middle">m</text>',
             f'<text x="12" y="{height // 2}" font-size="12" '
             f'transform="rotate(-90 12 {height // 2})" '
             f'text-anchor="middle">log10 |diff|</text>']
    for i, pts in enumerate(pts_by_index):
        if not pts:
            continue
        path = " ".join(f"{sx(m):.1f},{sy(y):.1f}" for m, y in pts)
        color = palette[i % len(palette)]
        parts.append(f'<polyline points="{path}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" '
                     f'y="{sy(pts[-1][1]):.1f}" font-size="11" '
                     f'fill="{color}">i={i + 1}</text>')
    parts.append("</svg>")
    return "\n".join(parts)

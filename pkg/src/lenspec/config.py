"""Numerical tolerances, overridable per call and from the environment."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

ENV_PREFIX = "LENSPEC_TOL_"


@dataclass(frozen=True)
class Tolerances:
    """Acceptance thresholds used across the library.

    Relator residuals are measured relative to the conditioning of the
    relator product (see ``lenspec.reps.relator_residual``); determinant
    and eigenvalue tolerances are plain relative errors.
    """

    relator_build: float = 1e-9
    relator_load: float = 1e-8
    relator_deform: float = 1e-10
    det_tol: float = 1e-9
    inverse_residual: float = 1e-10
    eigen_imag_rel: float = 1e-7
    gap_tol: float = 1e-7
    fingerprint_tol: float = 1e-7
    conjugacy_match_tol: float = 1e-6
    near_identity_tol: float = 1e-6
    conv_tail_tol: float = 1e-8
    conv_min_corr: float = 0.99
    conv_exact_floor: float = 1e-9

    def with_overrides(self, overrides: dict[str, float]) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise KeyError(f"unknown tolerance name(s): {sorted(bad)}")
        for name, value in overrides.items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive, got {value}")
        return replace(self, **overrides)


def from_env(base: Tolerances | None = None, environ=None) -> Tolerances:
    """Apply ``LENSPEC_TOL_<NAME>=<value>`` environment overrides."""
    env = os.environ if environ is None else environ
    base = base if base is not None else Tolerances()
    overrides = {}
    for f in fields(Tolerances):
        raw = env.get(ENV_PREFIX + f.name.upper())
        if raw is not None:
            overrides[f.name] = float(raw)
    return base.with_overrides(overrides)


DEFAULT = Tolerances()

"""Synthetic efficiency datasets and quadratic model fitting."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from ..energy import PATTERNS, PatternCoefficients
from .dynamics import DynamicsError, SpeedProfile, VehicleDynamicsParams, simulate_cycle

DEFAULT_MASSES = (0.0, 150.0, 300.0, 450.0)
DEFAULT_SLOPES = tuple(np.round(np.linspace(-0.1, 0.1, 21), 10).tolist())
DATASET_HEADER = ["pattern", "mass_kg", "slope", "efficiency_wh_per_100m"]


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SimSample:
    mass_extra: float
    slope: float
    pattern: str
    efficiency: float


@dataclass(frozen=True)
class RegressionFit:
    coefficients: PatternCoefficients
    r_squared: float
    residual_max: float
    n_samples: int
    nonneg_refit: bool = False

    def report(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "residual_max": self.residual_max,
            "n_samples": self.n_samples,
            "nonneg_refit": self.nonneg_refit,
        }


def generate_dataset(
    params: VehicleDynamicsParams,
    profiles: list[SpeedProfile],
    mass_grid=DEFAULT_MASSES,
    slope_grid=DEFAULT_SLOPES,
    workers: int | None = None,
) -> list[SimSample]:
    """Simulate every (profile, mass, slope) cell; output order is fixed."""
    if not profiles or len(mass_grid) == 0 or len(slope_grid) == 0:
        raise DynamicsError("profiles, mass grid and slope grid must be non-empty")
    cells = [(p, float(m), float(s)) for p in profiles for m in mass_grid for s in slope_grid]

    def run(cell):
        prof, m, s = cell
        return SimSample(m, s, prof.label, simulate_cycle(params, prof, s, m))

    workers = workers or int(os.environ.get("EVROUTER_THREADS", "1"))
    if workers <= 1:
        return [run(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cells))


def _design(m: np.ndarray, s: np.ndarray, cubic: bool = False) -> np.ndarray:
    cols = [m * s * s, m * s, m, s * s, s, np.ones_like(s)]
    if cubic:
        cols += [m * s**3, s**3]
    return np.column_stack(cols)


def _arrays(samples, pattern):
    rows = [x for x in samples if pattern is None or x.pattern == pattern]
    m = np.array([x.mass_extra for x in rows], dtype=float)
    s = np.array([x.slope for x in rows], dtype=float)
    y = np.array([x.efficiency for x in rows], dtype=float)
    return m, s, y


def fit_quadratic(samples: list[SimSample], pattern: str | None) -> RegressionFit:
    """Least-squares fit of the six model coefficients.

    ``pattern=None`` pools every sample (used for the Overall row).  A
    non-negative refit replaces the plain solution when any coefficient
    comes out negative.
    """
    m, s, y = _arrays(samples, pattern)
    if len(y) < 6 or len(np.unique(m)) < 2 or len(np.unique(s)) < 3:
        raise FitError(
            f"pattern {pattern}: need >= 6 samples over >= 2 masses and >= 3 slopes, got {len(y)}"
        )
    X = _design(m, s)
    # column scaling keeps the mass columns comparable to the slope columns
    scale = np.abs(X).max(axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    if np.linalg.matrix_rank(Xs) < 6:
        raise FitError(f"pattern {pattern}: rank-deficient design")
    c, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    refit = bool(np.any(c < 0))
    if refit:
        c, _ = nnls(Xs, y)
    c = c / scale
    resid = y - X @ c
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    coeffs = PatternCoefficients(*(max(float(v), 0.0) for v in c))
    return RegressionFit(coeffs, r2, float(np.abs(resid).max()), len(y), refit)


def cubic_check(samples: list[SimSample], pattern: str | None) -> float:
    """Size of the best cubic-in-slope correction relative to the fit.

    Refits with ``m*s^3`` and ``s^3`` columns added and returns
    ``max |cubic part| / max |fitted value|`` over the sample grid.
    """
    m, s, y = _arrays(samples, pattern)
    X = _design(m, s, cubic=True)
    c, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ c
    return float(np.abs(X[:, 6:] @ c[6:]).max() / np.abs(fitted).max())


def samples_from_coefficients(coeffs: PatternCoefficients, pattern: str, masses, slopes) -> list[SimSample]:
    """Noise-free samples straight from the quadratic model."""
    out = []
    for m in masses:
        q2, q1, q0 = coeffs.with_load(float(m))
        for s in slopes:
            out.append(SimSample(float(m), float(s), pattern, q2 * s * s + q1 * s + q0))
    return out


def fit_patterns(samples: list[SimSample]) -> dict[str, RegressionFit]:
    """One fit per pattern label found in ``samples``.

    Overall comes from its own (full-cycle) samples when present, otherwise
    from all samples pooled together.
    """
    present = {x.pattern for x in samples}
    labels = [p for p in PATTERNS if p in present] + sorted(present - set(PATTERNS))
    fits = {p: fit_quadratic(samples, p) for p in labels}
    if "Overall" not in fits:
        fits["Overall"] = fit_quadratic(samples, None)
    return fits


def write_dataset_csv(samples: list[SimSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for x in samples:
            w.writerow([x.pattern, repr(x.mass_extra), repr(x.slope), repr(x.efficiency)])


def read_dataset_csv(path) -> list[SimSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DATASET_HEADER:
            raise FitError(f"{path}: expected header {','.join(DATASET_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(SimSample(
                    float(row["mass_kg"]), float(row["slope"]), row["pattern"],
                    float(row["efficiency_wh_per_100m"]),
                ))
            except (TypeError, ValueError) as exc:
                raise FitError(f"{path}:{lineno}: bad row") from exc
    return out

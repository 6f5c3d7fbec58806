"""Bundled stop-and-go speed profiles and CSV import."""
from __future__ import annotations

import csv

import numpy as np

from ..energy import DEFAULT_PATTERN_SPEEDS
from .dynamics import DynamicsError, SpeedProfile

# (cruise km/h, cruise s, idle s, accel m/s^2, decel m/s^2) per micro-trip
_SHAPES = {
    "Slow": [(25, 30, 25, 0.8, 0.9), (35, 45, 20, 0.7, 0.8), (20, 20, 30, 0.9, 1.0),
             (30, 60, 15, 0.8, 0.8), (28, 35, 40, 0.7, 0.9)],
    "Medium": [(50, 60, 15, 0.7, 0.8), (60, 90, 10, 0.6, 0.7), (45, 40, 20, 0.8, 0.9),
               (55, 70, 12, 0.6, 0.8)],
    "High": [(70, 120, 8, 0.5, 0.6), (80, 100, 5, 0.5, 0.7), (65, 60, 10, 0.6, 0.7)],
    "ExtraHigh": [(110, 150, 5, 0.5, 0.6), (125, 90, 0, 0.4, 0.5)],
}


def _trapezoids(trips) -> np.ndarray:
    out = []
    for cruise_kmh, cruise_s, idle_s, acc, dec in trips:
        vc = cruise_kmh / 3.6
        up = np.arange(0.0, vc, acc)
        down = np.arange(vc, 0.0, -dec)
        out += [up, np.full(int(cruise_s), vc), down, np.zeros(int(idle_s) + 1)]
    return np.concatenate(out)


def make_profile(label: str, trips, mean_speed_kmh: float) -> SpeedProfile:
    """Concatenate trapezoidal micro-trips and rescale to the target mean speed."""
    v = _trapezoids(trips)
    v *= (mean_speed_kmh / 3.6) / v.mean()
    return SpeedProfile(label, v)


def bundled_profiles() -> list[SpeedProfile]:
    return [make_profile(k, _SHAPES[k], DEFAULT_PATTERN_SPEEDS[k]) for k in _SHAPES]


def full_cycle(profiles: list[SpeedProfile], label: str = "Overall") -> SpeedProfile:
    """All phases driven back to back."""
    return SpeedProfile(label, np.concatenate([p.samples for p in profiles]))


def load_profile_csv(path, label: str) -> SpeedProfile:
    """Read a 1 Hz trace with header ``t_s,v_ms``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t_s", "v_ms"]:
            raise DynamicsError(f"{path}: expected header t_s,v_ms")
        t, v = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t.append(float(row[0]))
                v.append(float(row[1]))
            except (ValueError, IndexError) as exc:
                raise DynamicsError(f"{path}:{lineno}: bad row {row!r}") from exc
    t = np.asarray(t)
    if t.size > 1 and not np.allclose(np.diff(t), 1.0):
        raise DynamicsError(f"{path}: samples must be 1 s apart")
    return SpeedProfile(label, np.asarray(v))


def save_profile_csv(profile: SpeedProfile, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "v_ms"])
        for i, v in enumerate(profile.samples.tolist()):
            w.writerow([i, repr(v)])

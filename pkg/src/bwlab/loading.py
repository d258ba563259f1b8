"""Quasi-static loading histories: catalog, modules, and discretization.

A loading history is a sequence of symmetric displacement-controlled
cycles. Each cycle with amplitude A (in yield-displacement units) traces
0 -> +A -> -A -> 0, so one cycle adds 4A to the cumulative displacement
path. Histories are discretized into uniform displacement steps of
``step_size`` (default 0.1 u_y); when an amplitude does not sit on the
step grid, the final step of a segment is shortened to land exactly on
the target, which keeps reversals sharp at the cost of a slightly short
step.

The catalog holds the 18 cyclic test histories used throughout the
package together with the per-category identification modules and the
per-variant recommended histories derived from them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .params import Variant

DEFAULT_STEP_SIZE = 0.1

# Catalog of cyclic histories: index -> cycle amplitudes in u_y units.
TABLE_HISTORIES: dict[int, tuple[float, ...]] = {
    1: (0.5,) * 8,
    2: (1.0,) * 4,
    3: (2.0,),
    4: (3.0,),
    5: (4.0,),
    6: (5.0,),
    7: (6.0,),
    8: (2.0, 2.0),
    9: (2.0,) * 4,
    10: (2.0,) * 8,
    11: (2.0, 3.0),
    12: (2.0, 3.0, 4.0),
    13: (2.0, 3.0, 4.0, 5.0),
    14: (2.0, 3.0, 4.0, 5.0, 6.0),
    15: (2.0, 2.0, 3.0, 3.0, 4.0, 4.0),
    16: (2.0, 2.0, 2.0, 4.0, 4.0, 4.0),
    17: (2.0, 2.0, 2.0, 3.0, 4.0, 5.0),
    18: (2.0, 2.0, 2.0, 2.0, 5.0, 5.0),
}

# Shortest histories that expose each parameter category: the basic shape
# parameters need repeated cycles beyond 3 u_y, degradation needs at least
# 10 u_y of cumulative travel, and pinching needs the graded multi-level
# sweep of catalog entry 15.
MODULE_AMPLITUDES: dict[str, tuple[float, ...]] = {
    "BSC": (3.0, 3.0),
    "DGD": (2.0, 2.0, 3.0, 3.0),
    "PCH": TABLE_HISTORIES[15],
}

# Recommended identification history per model variant: the union of the
# modules for the variant's active categories.
OPTIMAL_AMPLITUDES: dict[Variant, tuple[float, ...]] = {
    Variant.BW: MODULE_AMPLITUDES["DGD"],
    Variant.BW_DEG: MODULE_AMPLITUDES["DGD"],
    Variant.BWBN: MODULE_AMPLITUDES["PCH"],
    Variant.M_BWBN: MODULE_AMPLITUDES["PCH"],
}

# Default amplitudes for the long reference history: 430 steps of 0.1 u_y
# and a cumulative path of 42.8 u_y.
REFERENCE_AMPLITUDES: tuple[float, ...] = (
    0.3, 0.3, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.5, 1.5, 2.6,
)
REFERENCE_STEPS = 430

_LAND_TOL = 1e-9


@dataclass(frozen=True)
class LoadingHistory:
    """Symmetric cyclic displacement history in yield-displacement units.

    amplitudes: cycle amplitudes in u_y units, all positive.
    u_y: yield displacement in meters used to convert to physical units.
    step_size: discretization step in u_y units.
    """

    amplitudes: tuple[float, ...]
    u_y: float
    step_size: float = DEFAULT_STEP_SIZE
    label: str = ""

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if not amps:
            raise ValueError("history needs at least one cycle")
        if any(not math.isfinite(a) or a <= 0.0 for a in amps):
            raise ValueError("cycle amplitudes must be positive and finite")
        if not (math.isfinite(self.u_y) and self.u_y > 0.0):
            raise ValueError("u_y must be positive")
        if not (math.isfinite(self.step_size) and self.step_size > 0.0):
            raise ValueError("step_size must be positive")

    @property
    def cumulative_amplitude(self) -> float:
        """Sum of cycle amplitudes, u_y units."""
        return float(sum(self.amplitudes))

    @property
    def path_length(self) -> float:
        """Total displacement travel in u_y units (4x amplitude per cycle)."""
        return 4.0 * self.cumulative_amplitude

    @property
    def n_steps(self) -> int:
        """Number of discretization steps (points minus the rest point)."""
        return int(self.discretize_normalized().size - 1)

    def discretize_normalized(self) -> np.ndarray:
        """Displacement points in u_y units, starting and ending at 0."""
        h = self.step_size
        pts = [0.0]
        cur = 0.0
        for a in self.amplitudes:
            for target in (a, -a, 0.0):
                seg = target - cur
                dist = abs(seg)
                if dist <= _LAND_TOL:
                    cur = target
                    continue
                sgn = 1.0 if seg > 0.0 else -1.0
                m = int(math.floor(dist / h + _LAND_TOL))
                for k in range(1, m + 1):
                    pts.append(cur + sgn * h * k)
                if m > 0 and abs(pts[-1] - target) <= _LAND_TOL:
                    pts[-1] = target  # snap, the remainder is fp noise
                else:
                    pts.append(target)  # shortened landing step
                cur = target
        return np.array(pts)

    def discretize(self) -> np.ndarray:
        """Displacement points in meters."""
        return self.discretize_normalized() * self.u_y

    def with_u_y(self, u_y: float) -> "LoadingHistory":
        return replace(self, u_y=float(u_y))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "u_y_m": self.u_y,
            "step_size_uy": self.step_size,
            "amplitudes_uy": list(self.amplitudes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LoadingHistory":
        keys = {"label", "u_y_m", "step_size_uy", "amplitudes_uy"}
        unknown = set(data) - keys
        if unknown:
            raise ValueError(f"unknown history keys: {sorted(unknown)}")
        missing = {"u_y_m", "amplitudes_uy"} - set(data)
        if missing:
            raise ValueError(f"missing history keys: {sorted(missing)}")
        return cls(
            amplitudes=tuple(data["amplitudes_uy"]),
            u_y=float(data["u_y_m"]),
            step_size=float(data.get("step_size_uy", DEFAULT_STEP_SIZE)),
            label=str(data.get("label", "")),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "LoadingHistory":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write_series_csv(self, path: str | Path) -> None:
        series = self.discretize()
        with open(path, "w", newline="") as fh:
            fh.write("step,u_m\n")
            for i, val in enumerate(series):
                fh.write(f"{i},{val:.9g}\n")


def table_history(index: int, u_y: float,
                  step_size: float = DEFAULT_STEP_SIZE) -> LoadingHistory:
    """One of the 18 catalog histories, labeled LH<index>."""
    if index not in TABLE_HISTORIES:
        raise ValueError(f"catalog index must be 1..18, got {index}")
    return LoadingHistory(amplitudes=TABLE_HISTORIES[index], u_y=u_y,
                          step_size=step_size, label=f"LH{index}")


def module_history(category: str, u_y: float,
                   step_size: float = DEFAULT_STEP_SIZE) -> LoadingHistory:
    """Shortest history that exposes one parameter category (BSC/DGD/PCH)."""
    if category not in MODULE_AMPLITUDES:
        raise ValueError(f"category must be one of {sorted(MODULE_AMPLITUDES)}")
    return LoadingHistory(amplitudes=MODULE_AMPLITUDES[category], u_y=u_y,
                          step_size=step_size, label=f"{category}-module")


def optimal_history(variant: Variant | str, u_y: float,
                    step_size: float = DEFAULT_STEP_SIZE) -> LoadingHistory:
    """Recommended identification history for a model variant."""
    variant = Variant(variant)
    return LoadingHistory(amplitudes=OPTIMAL_AMPLITUDES[variant], u_y=u_y,
                          step_size=step_size, label=f"{variant.value}-optimal")


def reference_history(u_y: float, amplitudes=None, strict: bool = True,
                      step_size: float = DEFAULT_STEP_SIZE) -> LoadingHistory:
    """Long mixed-amplitude history used for full-length training curves.

    With strict=True the discretized step count must equal
    :data:`REFERENCE_STEPS`; pass strict=False to allow custom lengths.
    """
    amps = REFERENCE_AMPLITUDES if amplitudes is None else tuple(amplitudes)
    hist = LoadingHistory(amplitudes=amps, u_y=u_y, step_size=step_size,
                          label="REF")
    if strict and hist.n_steps != REFERENCE_STEPS:
        raise ValueError(
            f"reference history must discretize to {REFERENCE_STEPS} steps, "
            f"got {hist.n_steps}"
        )
    return hist


def envelope_history(peak: float, n_cycles: int, u_y: float,
                     rise_frac: float = 0.25, plateau_frac: float = 0.25,
                     decay_rate: float = 2.0,
                     step_size: float = DEFAULT_STEP_SIZE) -> LoadingHistory:
    """Earthquake-like validation history under a rise/plateau/decay envelope.

    Cycle amplitudes follow a Jennings-type envelope evaluated at the cycle
    midpoints and scaled so the largest amplitude equals ``peak`` exactly:
    quadratic rise over the first rise_frac of the cycles, unit plateau over
    the next plateau_frac, exponential decay at ``decay_rate`` over the rest.
    """
    if not (peak > 0.0 and math.isfinite(peak)):
        raise ValueError("peak must be positive")
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if rise_frac < 0.0 or plateau_frac < 0.0 or rise_frac + plateau_frac >= 1.0:
        raise ValueError("need rise_frac, plateau_frac >= 0 and their sum < 1")
    x = (np.arange(n_cycles) + 0.5) / n_cycles
    env = np.empty(n_cycles)
    for i, xi in enumerate(x):
        if xi < rise_frac:
            env[i] = (xi / rise_frac) ** 2
        elif xi <= rise_frac + plateau_frac:
            env[i] = 1.0
        else:
            tail = (xi - rise_frac - plateau_frac) / (1.0 - rise_frac - plateau_frac)
            env[i] = math.exp(-decay_rate * tail)
    amps = peak * env / env.max()
    return LoadingHistory(amplitudes=tuple(amps), u_y=u_y, step_size=step_size,
                          label=f"ENV-{peak:g}x{n_cycles}")

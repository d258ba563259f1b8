"""Parameter set, bounds, and model variants for the Bouc-Wen family.

The full model (m-BWBN) couples a basic smooth hysteresis rule with
strength/stiffness degradation and pinching. Its 13 parameters fall into
three categories:

* BSC (basic shape control): T, F_y, alpha, beta, n
* DGD (degradation):         delta_nu, delta_eta
* PCH (pinching):            zeta0, p, q, psi, delta_psi, lam

Simpler variants are obtained by pinning the unused categories to neutral
values, which this module enforces at construction time:

* ``BW``     plain Bouc-Wen (no degradation, no pinching)
* ``BWdeg``  Bouc-Wen with degradation
* ``BWBN``   full parameter set (degradation + pinching)
* ``mBWBN``  same parameter set as BWBN; kept as a distinct tag because the
             pinching law here follows the modified formulation in which the
             pinching spike tracks the signed hysteretic displacement

Units convention: T in seconds, F_y in units of g (mass-normalized yield
strength), everything else dimensionless. Derived quantities: k0 = (2*pi/T)^2
(1/s^2), u_y = F_y * G / k0 (meters).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

G = 9.81  # gravitational acceleration, m/s^2

PARAM_NAMES: tuple[str, ...] = (
    "T", "F_y", "alpha", "beta", "n",
    "delta_nu", "delta_eta",
    "zeta0", "p", "q", "psi", "delta_psi", "lam",
)

# Admissible ranges, one row per parameter (lower, upper), all inclusive.
PARAM_BOUNDS: dict[str, tuple[float, float]] = {
    "T": (0.05, 5.0),
    "F_y": (0.05, 1.5),
    "alpha": (0.0, 0.5),
    "beta": (0.1, 0.9),
    "n": (1.0, 5.0),
    "delta_nu": (0.0, 0.36),
    "delta_eta": (0.0, 0.39),
    "zeta0": (0.0, 1.0),
    "p": (0.0, 1.38),
    "q": (0.01, 0.43),
    "psi": (0.1, 0.85),
    "delta_psi": (0.0, 0.09),
    "lam": (0.01, 0.8),
}

BSC_NAMES: tuple[str, ...] = ("T", "F_y", "alpha", "beta", "n")
DGD_NAMES: tuple[str, ...] = ("delta_nu", "delta_eta")
PCH_NAMES: tuple[str, ...] = ("zeta0", "p", "q", "psi", "delta_psi", "lam")

CATEGORY_NAMES: dict[str, tuple[str, ...]] = {
    "BSC": BSC_NAMES,
    "DGD": DGD_NAMES,
    "PCH": PCH_NAMES,
}

# Values that switch a category off. With delta_nu = delta_eta = 0 the
# degradation functions stay at 1; with zeta0 = 0 the pinching function h
# is identically 1 regardless of the remaining PCH values, which are pinned
# to their lower bounds so masked parameter sets still satisfy the bounds.
NEUTRAL_VALUES: dict[str, float] = {
    "delta_nu": 0.0,
    "delta_eta": 0.0,
    "zeta0": 0.0,
    "p": 0.0,
    "q": 0.01,
    "psi": 0.1,
    "delta_psi": 0.0,
    "lam": 0.01,
}


class Variant(str, enum.Enum):
    BW = "BW"
    BW_DEG = "BWdeg"
    BWBN = "BWBN"
    M_BWBN = "mBWBN"

    @property
    def active_names(self) -> tuple[str, ...]:
        if self is Variant.BW:
            return BSC_NAMES
        if self is Variant.BW_DEG:
            return BSC_NAMES + DGD_NAMES
        return PARAM_NAMES

    @property
    def masked_names(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_NAMES if n not in self.active_names)


@dataclass(frozen=True)
class BwParams:
    """One admissible parameter set plus its variant tag.

    Construction validates every field against :data:`PARAM_BOUNDS` and
    checks that parameters outside the variant's active categories hold
    their neutral values. gamma is not a free field: the loop-shape
    constraint beta + gamma = 1 is enforced by construction.
    """

    T: float
    F_y: float
    alpha: float
    beta: float
    n: float
    delta_nu: float = 0.0
    delta_eta: float = 0.0
    zeta0: float = 0.0
    p: float = 0.0
    q: float = 0.01
    psi: float = 0.1
    delta_psi: float = 0.0
    lam: float = 0.01
    variant: Variant = Variant.M_BWBN

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            lo, hi = PARAM_BOUNDS[name]
            if not (lo <= value <= hi) or not math.isfinite(value):
                raise ValueError(
                    f"{name}={value!r} outside admissible range [{lo}, {hi}]"
                )
        for name in self.variant.masked_names:
            if getattr(self, name) != NEUTRAL_VALUES[name]:
                raise ValueError(
                    f"variant {self.variant.value} requires {name}="
                    f"{NEUTRAL_VALUES[name]} (got {getattr(self, name)})"
                )

    @property
    def gamma(self) -> float:
        return 1.0 - self.beta

    @property
    def k0(self) -> float:
        """Initial stiffness per unit mass, (2*pi/T)^2, in 1/s^2."""
        return (2.0 * math.pi / self.T) ** 2

    @property
    def f_y_si(self) -> float:
        """Mass-normalized yield strength in m/s^2."""
        return self.F_y * G

    @property
    def u_y(self) -> float:
        """Yield displacement in meters: F_y * G / k0."""
        return self.f_y_si / self.k0

    def to_vector(self) -> np.ndarray:
        """All 13 parameters as a float array, canonical order."""
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_vector(cls, vec, variant: Variant | str = Variant.M_BWBN) -> "BwParams":
        """Build from a 13-vector in canonical order.

        Entries outside the variant's active categories are replaced by
        their neutral values, so estimation code can hand over raw search
        vectors without masking first.
        """
        variant = Variant(variant)
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(PARAM_NAMES),):
            raise ValueError(f"expected a vector of {len(PARAM_NAMES)} parameters")
        values = dict(zip(PARAM_NAMES, vec.tolist()))
        for name in variant.masked_names:
            values[name] = NEUTRAL_VALUES[name]
        return cls(variant=variant, **values)

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in PARAM_NAMES}
        out["variant"] = self.variant.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BwParams":
        known = set(PARAM_NAMES) | {"variant"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = [n for n in ("T", "F_y", "alpha", "beta", "n") if n not in data]
        if missing:
            raise ValueError(f"missing required parameter keys: {missing}")
        return cls(**data)

    def replace(self, **changes) -> "BwParams":
        return replace(self, **changes)


def bounds_arrays(names: tuple[str, ...] = PARAM_NAMES) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bound vectors for the given parameter names."""
    lo = np.array([PARAM_BOUNDS[n][0] for n in names], dtype=float)
    hi = np.array([PARAM_BOUNDS[n][1] for n in names], dtype=float)
    return lo, hi

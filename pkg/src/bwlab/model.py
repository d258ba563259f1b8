"""Constitutive equations and quasi-static response simulation.

The hysteretic restoring force per unit mass is

    f_s = alpha * k0 * u + (1 - alpha) * F_y * z

with the dimensionless hysteretic displacement z governed by

    dz/dt = (h / eta) * du/dt * (1 - |z|^n * (beta * sgn(du/dt * z) + gamma) * nu) / u_y

and the hysteretic energy per unit mass by

    deps_n/dt = (1 - alpha) * F_y * z * du/dt

Degradation enters through nu = 1 + delta_nu * eps_n (strength) and
eta = 1 + delta_eta * eps_n (stiffness). Pinching enters through the
multiplier h, a Gaussian notch of depth zeta1 centered at z * sgn(du/dt)
= q * z_u with width zeta2, where z_u is the ultimate hysteretic
displacement at the current degradation level.

Because every term multiplying du/dt depends only on the current state and
the sign of the velocity, quasi-static (rate-independent) response is
integrated in displacement directly: each monotone displacement increment
is advanced with classical RK4 over equal sub-increments, holding the
velocity sign fixed. :mod:`bwlab._kernels` holds a compiled batch variant
of the same arithmetic; tests pin the two together.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import IntegrationError
from .params import BwParams

DEFAULT_SUBSTEPS = 4


@dataclass(frozen=True)
class HystereticState:
    """Full state of the hysteretic oscillator at one instant."""

    u: float
    z: float
    eps_n: float
    f_s: float

    @classmethod
    def rest(cls) -> "HystereticState":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class AuxiliaryValues:
    """Degradation and pinching quantities evaluated at one state."""

    nu: float
    eta: float
    z_u: float
    zeta1: float
    zeta2: float
    h: float


def evaluate_auxiliary(params: BwParams, z: float, eps_n: float,
                       velocity_sign: float = 1.0) -> AuxiliaryValues:
    """Evaluate nu, eta, z_u, zeta1, zeta2, and h at the given state."""
    nu = 1.0 + params.delta_nu * eps_n
    eta = 1.0 + params.delta_eta * eps_n
    z_u = (1.0 / (nu * (params.beta + params.gamma))) ** (1.0 / params.n)
    zeta1 = params.zeta0 * (1.0 - math.exp(-params.p * eps_n))
    zeta2 = (params.psi + params.delta_psi * eps_n) * (params.lam + zeta1)
    h = 1.0
    if params.zeta0 != 0.0 and zeta2 != 0.0:
        arg = (z * velocity_sign - params.q * z_u) / zeta2
        h = 1.0 - zeta1 * math.exp(-(arg * arg))
    return AuxiliaryValues(nu=nu, eta=eta, z_u=z_u, zeta1=zeta1, zeta2=zeta2, h=h)


def resisting_force(params: BwParams, u: float, z: float) -> float:
    """Restoring force per unit mass (m/s^2) at displacement u and state z."""
    return params.alpha * params.k0 * u + (1.0 - params.alpha) * params.f_y_si * z


def state_rates(params: BwParams, z: float, eps_n: float,
                u_dot: float) -> tuple[float, float]:
    """Time rates (dz/dt, deps_n/dt) at the given state and velocity."""
    if u_dot == 0.0:
        return 0.0, 0.0
    sgn_v = 1.0 if u_dot > 0.0 else -1.0
    dz_du, deps_du = _displacement_rates(params, z, eps_n, sgn_v)
    return dz_du * u_dot, deps_du * u_dot


def _displacement_rates(params: BwParams, z: float, eps: float,
                        sgn_v: float) -> tuple[float, float]:
    # mirrors _kernels._du_rates operation for operation
    nu = 1.0 + params.delta_nu * eps
    eta = 1.0 + params.delta_eta * eps
    zu = (1.0 / (nu * (params.beta + params.gamma))) ** (1.0 / params.n)
    h = 1.0
    if params.zeta0 != 0.0:
        zeta1 = params.zeta0 * (1.0 - math.exp(-params.p * eps))
        zeta2 = (params.psi + params.delta_psi * eps) * (params.lam + zeta1)
        if zeta2 != 0.0:
            arg = (z * sgn_v - params.q * zu) / zeta2
            h = 1.0 - zeta1 * math.exp(-(arg * arg))
    zs = z * sgn_v
    if zs > 0.0:
        s = 1.0
    elif zs < 0.0:
        s = -1.0
    else:
        s = 0.0
    dz = (h / eta) * (1.0 - (abs(z) ** params.n) * (params.beta * s + params.gamma) * nu) / params.u_y
    deps = (1.0 - params.alpha) * params.f_y_si * z
    return dz, deps


def step_quasi_static(params: BwParams, state: HystereticState, delta_u: float,
                      substeps: int = DEFAULT_SUBSTEPS) -> HystereticState:
    """Advance one monotone displacement increment quasi-statically.

    The velocity sign is taken from the sign of delta_u and held fixed, so
    a load reversal must start a new step. delta_u == 0 returns the state
    unchanged. Raises :class:`IntegrationError` if the state blows up.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if not math.isfinite(delta_u):
        raise ValueError("delta_u must be finite")
    if delta_u == 0.0:
        return state
    sgn_v = 1.0 if delta_u > 0.0 else -1.0
    h = delta_u / substeps
    z = state.z
    eps = state.eps_n
    for k in range(substeps):
        k1z, k1e = _displacement_rates(params, z, eps, sgn_v)
        k2z, k2e = _displacement_rates(params, z + 0.5 * h * k1z, eps + 0.5 * h * k1e, sgn_v)
        k3z, k3e = _displacement_rates(params, z + 0.5 * h * k2z, eps + 0.5 * h * k2e, sgn_v)
        k4z, k4e = _displacement_rates(params, z + h * k3z, eps + h * k3e, sgn_v)
        z = z + (h / 6.0) * (k1z + 2.0 * (k2z + k3z) + k4z)
        eps = eps + (h / 6.0) * (k1e + 2.0 * (k2e + k3e) + k4e)
        if not (math.isfinite(z) and math.isfinite(eps)) or abs(z) > 1e8:
            raise IntegrationError("hysteretic state blew up", step_index=k)
    u = state.u + delta_u
    return HystereticState(u=u, z=z, eps_n=eps, f_s=resisting_force(params, u, z))


@dataclass(frozen=True)
class HysteresisCurve:
    """A displacement series and the force it produced, both per point.

    Point 0 is the rest state (u = 0, f = 0). Displacements are meters,
    forces are per unit mass (m/s^2).
    """

    u: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u.ndim != 1 or u.shape != f.shape or u.size < 1:
            raise ValueError("u and f must be 1-d arrays of equal nonzero length")
        if not (np.isfinite(u).all() and np.isfinite(f).all()):
            raise ValueError("curve contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "f", f)

    def __len__(self) -> int:
        return int(self.u.size)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("step,u_m,f_mps2\n")
            for i in range(len(self)):
                fh.write(f"{i},{self.u[i]:.9g},{self.f[i]:.9g}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "HysteresisCurve":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["step", "u_m", "f_mps2"]:
                raise ValueError(f"unexpected curve header: {header!r}")
            u = []
            f = []
            for row in reader:
                if not row:
                    continue
                u.append(float(row[1]))
                f.append(float(row[2]))
        return cls(u=np.array(u), f=np.array(f))


def simulate_quasi_static(params: BwParams, displacements,
                          substeps: int = DEFAULT_SUBSTEPS) -> HysteresisCurve:
    """Run a full displacement series from rest and return the force curve.

    displacements must be a finite 1-d series starting at 0 (the rest
    point). Raises :class:`IntegrationError` with the offending step index
    if the response blows up.
    """
    disp = np.asarray(displacements, dtype=float)
    if disp.ndim != 1 or disp.size < 1:
        raise ValueError("displacements must be a 1-d series")
    if not np.isfinite(disp).all():
        raise ValueError("displacements contain non-finite values")
    if disp[0] != 0.0:
        raise ValueError("displacement series must start at 0")
    f = np.zeros_like(disp)
    state = HystereticState.rest()
    for j in range(1, disp.size):
        try:
            state = step_quasi_static(params, state, float(disp[j] - disp[j - 1]),
                                      substeps=substeps)
        except IntegrationError as err:
            raise IntegrationError("response blew up", step_index=j) from err
        f[j] = state.f_s
    return HysteresisCurve(u=disp.copy(), f=f)


def simulate_batch(params_sets, displacements, substeps: int = DEFAULT_SUBSTEPS):
    """Compiled batch version of :func:`simulate_quasi_static`.

    params_sets: a sequence of :class:`BwParams` or an (N, 13) array of
    canonical parameter rows. displacements: one shared series (M,) or one
    series per row (N, M), meters, starting at 0.

    Returns (f, z, eps_n, fail) arrays; fail[i] holds the first bad step
    index for row i (-1 when clean) instead of raising, so one divergent
    row cannot abort a batch.
    """
    if isinstance(params_sets, np.ndarray):
        theta = np.ascontiguousarray(params_sets, dtype=float)
    else:
        theta = np.array([p.to_vector() for p in params_sets], dtype=float)
    if theta.ndim != 2 or theta.shape[1] != 13:
        raise ValueError("expected an (N, 13) parameter array")
    disp = np.asarray(displacements, dtype=float)
    if disp.ndim == 1:
        disp = np.broadcast_to(disp, (theta.shape[0], disp.size))
    if disp.ndim != 2 or disp.shape[0] != theta.shape[0]:
        raise ValueError("displacements must be (M,) or (N, M)")
    if np.any(disp[:, 0] != 0.0):
        raise ValueError("displacement series must start at 0")
    disp = np.ascontiguousarray(disp)
    return _kernels.quasi_static_batch(theta, disp, substeps)

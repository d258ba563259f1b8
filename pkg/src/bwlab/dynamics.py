"""SDOF dynamic analysis: pushover, time history, IDA, and fragility.

The oscillator is mass-normalized throughout:

    u'' + 2 xi w u' + f_s(u, z) = -a_g(t)

with f_s from :mod:`bwlab.model` and w = 2 pi / T the initial-stiffness
circular frequency. Time stepping uses the average-acceleration Newmark
scheme with Newton iteration on the dynamic residual; the hysteretic state
advances by RK4 over each trial displacement increment (compiled kernels
in :mod:`bwlab._kernels`).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, optimize
from scipy.special import erf

from . import _kernels
from .errors import FragilityFitError, IntegrationError, YieldDetectionError
from .model import simulate_quasi_static
from .params import G, BwParams

DEFAULT_DAMPING = 0.05
NEWTON_TOL = 1e-8
NEWTON_CAP = 50


@dataclass(frozen=True)
class GroundMotion:
    """Uniformly sampled ground acceleration, stored in g units."""

    dt: float
    accel_g: np.ndarray
    label: str = ""

    def __post_init__(self):
        accel = np.asarray(self.accel_g, dtype=float)
        if accel.ndim != 1 or accel.size < 2:
            raise ValueError("need at least two acceleration samples")
        if not np.isfinite(accel).all():
            raise ValueError("acceleration contains non-finite values")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be positive")
        object.__setattr__(self, "accel_g", accel)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.accel_g.size)

    @property
    def accel_si(self) -> np.ndarray:
        return self.accel_g * G

    @property
    def duration(self) -> float:
        return float(self.dt * (self.accel_g.size - 1))

    def scaled(self, factor: float) -> "GroundMotion":
        return GroundMotion(dt=self.dt, accel_g=self.accel_g * factor,
                            label=self.label)

    @classmethod
    def read(cls, path: str | Path, label: str | None = None) -> "GroundMotion":
        """Read a two-column text record: time (s) and acceleration (g)."""
        data = np.loadtxt(path, dtype=float)
        if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
            raise ValueError(f"{path}: expected two columns (t, a_g)")
        t = data[:, 0]
        dt = float(t[1] - t[0])
        if dt <= 0.0 or np.max(np.abs(np.diff(t) - dt)) > 1e-6 * dt:
            raise ValueError(f"{path}: time column must be uniformly spaced")
        return cls(dt=dt, accel_g=data[:, 1],
                   label=Path(path).stem if label is None else label)

    def write(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for i, a in enumerate(self.accel_g):
                fh.write(f"{i * self.dt:.9g} {a:.9g}\n")


@dataclass(frozen=True)
class PushoverCurve:
    """Monotone displacement ramp and the force it produced."""

    u: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if u.ndim != 1 or u.shape != f.shape or u.size < 2:
            raise ValueError("u and f must be equal-length 1-d arrays, >= 2 points")
        if u[0] != 0.0 or np.any(np.diff(u) <= 0.0):
            raise ValueError("u must start at 0 and strictly increase")
        if not (np.isfinite(u).all() and np.isfinite(f).all()):
            raise ValueError("curve contains non-finite values")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "f", f)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("u_m,f_mps2\n")
            for i in range(self.u.size):
                fh.write(f"{self.u[i]:.9g},{self.f[i]:.9g}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "PushoverCurve":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["u_m", "f_mps2"]:
                raise ValueError(f"unexpected pushover header: {header!r}")
            u = []
            f = []
            for row in reader:
                if not row:
                    continue
                u.append(float(row[0]))
                f.append(float(row[1]))
        return cls(u=np.array(u), f=np.array(f))


def pushover(params: BwParams, max_drift: float, step: float,
             substeps: int = 4) -> PushoverCurve:
    """Monotone displacement ramp from rest to max_drift (meters)."""
    if not (max_drift > 0.0 and 0.0 < step <= max_drift):
        raise ValueError("need 0 < step <= max_drift")
    m = int(math.floor(max_drift / step + 1e-9))
    series = step * np.arange(m + 1)
    if series[-1] < max_drift - 1e-9 * max_drift:
        series = np.append(series, max_drift)
    else:
        series[-1] = max_drift
    curve = simulate_quasi_static(params, series, substeps=substeps)
    return PushoverCurve(u=curve.u, f=curve.f)


def yield_displacement(curve: PushoverCurve) -> float:
    """Locate the yield displacement of a monotone capacity curve.

    Intersects the initial-stiffness line through the origin with the
    tangent at the point of lowest positive tangential slope (the most
    yielded stretch of the curve). Raises :class:`YieldDetectionError`
    when the curve never softens (the two lines are parallel) or has no
    positive slope to anchor the tangent.
    """
    slopes = np.diff(curve.f) / np.diff(curve.u)
    k_init = float(slopes[0])
    if k_init <= 0.0:
        raise YieldDetectionError("initial stiffness is not positive")
    positive = np.flatnonzero(slopes > 0.0)
    if positive.size == 0:
        raise YieldDetectionError("no positive tangential slope on the curve")
    j = int(positive[np.argmin(slopes[positive])])
    k_tan = float(slopes[j])
    if k_tan >= k_init * (1.0 - 1e-9):
        raise YieldDetectionError("no yield detected: curve does not soften")
    u_mid = 0.5 * (curve.u[j] + curve.u[j + 1])
    f_mid = 0.5 * (curve.f[j] + curve.f[j + 1])
    u_y = (f_mid - k_tan * u_mid) / (k_init - k_tan)
    if not (u_y > 0.0 and math.isfinite(u_y)):
        raise YieldDetectionError("yield intersection fell outside the curve")
    return float(u_y)


@dataclass(frozen=True)
class Response:
    """Time-history response sampled on the integration grid."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    z: np.ndarray
    eps_n: np.ndarray

    @property
    def peak_displacement(self) -> float:
        return float(np.max(np.abs(self.u)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,u,v,a,z,eps_n\n")
            for i in range(self.t.size):
                fh.write(f"{self.t[i]:.9g},{self.u[i]:.9g},{self.v[i]:.9g},"
                         f"{self.a[i]:.9g},{self.z[i]:.9g},{self.eps_n[i]:.9g}\n")


def _substeps_for(dt: float, period: float, dt_sub: float | None) -> int:
    if dt_sub is not None:
        if dt_sub <= 0.0:
            raise ValueError("dt_sub must be positive")
        return max(1, int(math.ceil(dt / dt_sub - 1e-12)))
    # resolve the elastic period with at least 40 points
    return max(1, int(math.ceil(dt / (period / 40.0) - 1e-12)))


def time_history(params: BwParams, motion: GroundMotion,
                 damping: float = DEFAULT_DAMPING,
                 dt_sub: float | None = None) -> Response:
    """Integrate the hysteretic oscillator through a ground motion.

    damping is the viscous ratio xi on the initial-stiffness frequency.
    dt_sub optionally forces a finer integration grid; by default the
    motion's dt is subdivided until the elastic period is resolved by at
    least 40 sub-steps. Raises :class:`IntegrationError` if the Newton
    iteration fails or the state blows up.
    """
    if damping < 0.0:
        raise ValueError("damping must be >= 0")
    nsub = _substeps_for(motion.dt, params.T, dt_sub)
    t, u, v, a, z, eps, fail = _kernels.newmark_hysteretic(
        params.to_vector(), motion.accel_si, motion.dt, damping, nsub,
        NEWTON_TOL, NEWTON_CAP)
    if fail >= 0:
        raise IntegrationError("time integration failed", step_index=int(fail))
    return Response(t=t, u=u, v=v, a=a, z=z, eps_n=eps)


def spectral_acceleration(motion: GroundMotion, period: float,
                          damping: float = DEFAULT_DAMPING,
                          dt_sub: float | None = None) -> float:
    """Pseudo-spectral acceleration (g) of a linear oscillator."""
    if period <= 0.0:
        raise ValueError("period must be positive")
    if damping < 0.0:
        raise ValueError("damping must be >= 0")
    nsub = _substeps_for(motion.dt, period, dt_sub)
    w = 2.0 * math.pi / period
    u = _kernels.newmark_linear(motion.accel_si, motion.dt, w, damping, nsub)
    return float(w * w * np.max(np.abs(u)) / G)


@dataclass(frozen=True)
class IdaConfig:
    """Incremental dynamic analysis settings.

    Motions are amplitude-scaled so their spectral acceleration at
    sa_period (default: the analyzed model's T) hits each target level.
    """

    sa_levels: tuple[float, ...]
    damping: float = DEFAULT_DAMPING
    dt_sub: float | None = None
    sa_period: float | None = None

    def __post_init__(self):
        levels = tuple(float(s) for s in self.sa_levels)
        object.__setattr__(self, "sa_levels", levels)
        if not levels or any(s <= 0.0 for s in levels):
            raise ValueError("sa_levels must be positive")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("sa_levels must strictly increase")


@dataclass(frozen=True)
class IdaResult:
    """One row per (motion, intensity) cell. Failed cells carry peak nan."""

    motion: tuple[str, ...]
    sa_g: tuple[float, ...]
    peak_u_m: tuple[float, ...]
    failed: tuple[bool, ...]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("motion,sa_g,peak_u_m,failed\n")
            for i in range(len(self.motion)):
                fh.write(f"{self.motion[i]},{self.sa_g[i]:.9g},"
                         f"{self.peak_u_m[i]:.9g},{int(self.failed[i])}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "IdaResult":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["motion", "sa_g", "peak_u_m", "failed"]:
                raise ValueError(f"unexpected IDA header: {header!r}")
            motion = []
            sa = []
            peak = []
            failed = []
            for row in reader:
                if not row:
                    continue
                motion.append(row[0])
                sa.append(float(row[1]))
                peak.append(float(row[2]))
                failed.append(bool(int(row[3])))
        return cls(motion=tuple(motion), sa_g=tuple(sa), peak_u_m=tuple(peak),
                   failed=tuple(failed))


def ida(params: BwParams, motions, config: IdaConfig) -> IdaResult:
    """Scale each motion to each intensity level and record peak drifts.

    A cell whose integration fails is marked failed (peak nan) without
    aborting the grid.
    """
    motions = list(motions)
    if not motions:
        raise ValueError("need at least one ground motion")
    period = params.T if config.sa_period is None else config.sa_period
    rows_motion = []
    rows_sa = []
    rows_peak = []
    rows_failed = []
    for gm in motions:
        sa_1 = spectral_acceleration(gm, period, config.damping, config.dt_sub)
        if sa_1 <= 0.0:
            raise ValueError(f"motion {gm.label!r} has zero spectral acceleration")
        for level in config.sa_levels:
            scaled = gm.scaled(level / sa_1)
            rows_motion.append(gm.label)
            rows_sa.append(level)
            try:
                resp = time_history(params, scaled, config.damping, config.dt_sub)
                rows_peak.append(resp.peak_displacement)
                rows_failed.append(False)
            except IntegrationError:
                rows_peak.append(float("nan"))
                rows_failed.append(True)
    return IdaResult(motion=tuple(rows_motion), sa_g=tuple(rows_sa),
                     peak_u_m=tuple(rows_peak), failed=tuple(rows_failed))


@dataclass(frozen=True)
class FragilityCurve:
    """Lognormal fragility: P(exceed | sa) = Phi((ln sa - ln theta) / beta)."""

    ds: str
    theta: float
    beta: float

    def __post_init__(self):
        if not (self.theta > 0.0 and self.beta > 0.0):
            raise ValueError("theta and beta must be positive")

    def probability(self, sa) -> np.ndarray:
        sa = np.asarray(sa, dtype=float)
        x = (np.log(sa) - math.log(self.theta)) / self.beta
        return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))


def fit_fragility(sa_g, peak_u_m, threshold: float, ds: str = "") -> FragilityCurve:
    """Maximum-likelihood lognormal fragility fit from IDA cells.

    Each cell is one Bernoulli observation: exceedance of the drift
    threshold at the cell's intensity. Failed (nan) cells count as
    exceedance, the usual collapse convention. Degenerate data (all or
    none exceeding) cannot pin down a curve and raises
    :class:`FragilityFitError`.
    """
    sa = np.asarray(sa_g, dtype=float)
    peak = np.asarray(peak_u_m, dtype=float)
    if sa.shape != peak.shape or sa.ndim != 1 or sa.size < 2:
        raise ValueError("need matching 1-d sa/peak arrays with >= 2 cells")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    if np.any(sa <= 0.0):
        raise ValueError("sa values must be positive")
    exceed = np.where(np.isnan(peak), True, peak >= threshold)
    if exceed.all() or not exceed.any():
        raise FragilityFitError(
            f"threshold {threshold} is never/always exceeded; cannot fit")
    ln_sa = np.log(sa)
    y = exceed.astype(float)

    def nll(x):
        ln_theta, ln_beta = x
        beta = math.exp(ln_beta)
        zed = (ln_sa - ln_theta) / beta
        prob = 0.5 * (1.0 + erf(zed / math.sqrt(2.0)))
        prob = np.clip(prob, 1e-12, 1.0 - 1e-12)
        return -float(np.sum(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)))

    x0 = np.array([float(np.median(ln_sa)), math.log(0.4)])
    res = optimize.minimize(nll, x0, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12,
                                     "maxiter": 2000})
    ln_theta, ln_beta = res.x
    return FragilityCurve(ds=ds, theta=float(math.exp(ln_theta)),
                          beta=float(math.exp(ln_beta)))


def kl_divergence(c1: FragilityCurve, c2: FragilityCurve) -> float:
    """KL divergence D(c1 || c2) between two lognormal fragilities, closed form.

    With mu_i = ln theta_i: ln(b2/b1) + (b1^2 + (mu1 - mu2)^2) / (2 b2^2) - 1/2.
    """
    mu1 = math.log(c1.theta)
    mu2 = math.log(c2.theta)
    b1 = c1.beta
    b2 = c2.beta
    return math.log(b2 / b1) + (b1 * b1 + (mu1 - mu2) ** 2) / (2.0 * b2 * b2) - 0.5


def kl_divergence_quadrature(c1: FragilityCurve, c2: FragilityCurve) -> float:
    """Numerical cross-check of :func:`kl_divergence` by direct quadrature."""
    mu1 = math.log(c1.theta)
    mu2 = math.log(c2.theta)
    b1 = c1.beta
    b2 = c2.beta

    def integrand(x):
        p1 = math.exp(-((x - mu1) ** 2) / (2.0 * b1 * b1)) / (b1 * math.sqrt(2.0 * math.pi))
        log_ratio = (math.log(b2 / b1)
                     + ((x - mu2) ** 2) / (2.0 * b2 * b2)
                     - ((x - mu1) ** 2) / (2.0 * b1 * b1))
        return p1 * log_ratio

    val, _ = integrate.quad(integrand, mu1 - 12.0 * b1, mu1 + 12.0 * b1,
                            limit=200)
    return float(val)

"""Independent reference implementations used to cross-check the package.

Nothing here imports from bwlab's numerical internals: each oracle is a
from-scratch implementation of the same quantity (fine-step explicit
Euler instead of RK4, shoelace polygon area instead of trapezoid work,
a standalone average-acceleration Newmark loop, closed-form harmonic
response, textbook two-pass Pearson). Tests compare package output
against these.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

STANDARD_GRAVITY = 9.81


@njit(cache=True)
def euler_quasi_static(theta, disp, nsub):
    """Fine-step forward-Euler integration of the hysteretic ODE.

    theta is the 13-entry parameter vector in canonical order; disp is a
    displacement series in metres starting at 0. Returns the restoring
    force series. Deliberately first order: accuracy comes from nsub.
    """
    T = theta[0]
    fy = theta[1] * STANDARD_GRAVITY
    alpha = theta[2]
    beta = theta[3]
    n = theta[4]
    dnu = theta[5]
    deta = theta[6]
    zeta0 = theta[7]
    p = theta[8]
    q = theta[9]
    psi = theta[10]
    dpsi = theta[11]
    lam = theta[12]
    k0 = (2.0 * np.pi / T) ** 2
    uy = fy / k0
    gamma = 1.0 - beta

    f = np.zeros(disp.shape[0])
    z = 0.0
    eps = 0.0
    for j in range(1, disp.shape[0]):
        du = disp[j] - disp[j - 1]
        if du != 0.0:
            sv = 1.0 if du > 0.0 else -1.0
            h = du / nsub
            for _ in range(nsub):
                nu = 1.0 + dnu * eps
                eta = 1.0 + deta * eps
                zu = (1.0 / (nu * (beta + gamma))) ** (1.0 / n)
                hh = 1.0
                if zeta0 != 0.0:
                    z1 = zeta0 * (1.0 - np.exp(-p * eps))
                    z2 = (psi + dpsi * eps) * (lam + z1)
                    if z2 != 0.0:
                        arg = (z * sv - q * zu) / z2
                        hh = 1.0 - z1 * np.exp(-arg * arg)
                sz = z * sv
                s = 1.0 if sz > 0.0 else (-1.0 if sz < 0.0 else 0.0)
                dz = (hh / eta) * (1.0 - np.abs(z) ** n * (beta * s + gamma) * nu) / uy
                de = (1.0 - alpha) * fy * z
                z += h * dz
                eps += h * de
        f[j] = alpha * k0 * disp[j] + (1.0 - alpha) * fy * z
    return f


def shoelace_area(x, y) -> float:
    """Signed area of the polygon (x_i, y_i), positive counterclockwise."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def newmark_linear_reference(ag_si, dt, omega, xi):
    """Average-acceleration Newmark for a linear SDOF, closed-form update.

    u'' + 2 xi omega u' + omega^2 u = -ag, zero initial conditions.
    """
    ag = np.asarray(ag_si, dtype=float)
    nstep = ag.shape[0]
    c = 2.0 * xi * omega
    k = omega * omega
    u = np.zeros(nstep)
    v = np.zeros(nstep)
    a = np.zeros(nstep)
    a[0] = -ag[0]
    keff = k + 2.0 * c / dt + 4.0 / (dt * dt)
    for i in range(nstep - 1):
        rhs = (-ag[i + 1]
               + (4.0 / (dt * dt)) * u[i] + (4.0 / dt) * v[i] + a[i]
               + c * ((2.0 / dt) * u[i] + v[i]))
        u1 = rhs / keff
        v1 = 2.0 * (u1 - u[i]) / dt - v[i]
        a1 = 4.0 * (u1 - u[i]) / (dt * dt) - 4.0 * v[i] / dt - a[i]
        u[i + 1] = u1
        v[i + 1] = v1
        a[i + 1] = a1
    return u


def harmonic_steady_amplitude(omega, xi, omega_f, amp) -> float:
    """Steady-state |u| for u'' + 2 xi omega u' + omega^2 u = -amp sin(omega_f t)."""
    return amp / math.sqrt((omega * omega - omega_f * omega_f) ** 2
                           + (2.0 * xi * omega * omega_f) ** 2)


def pearson_reference(x, y) -> float:
    """Two-pass textbook Pearson correlation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    return float(np.sum(dx * dy) / math.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


def truncnorm_mean_sd(mean, sd, lo, hi):
    """Mean and standard deviation of a truncated normal, closed form."""
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    phi = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    Phi = lambda t: 0.5 * (1.0 + math.erf(t / math.sqrt(2.0)))
    zden = Phi(b) - Phi(a)
    m = mean + sd * (phi(a) - phi(b)) / zden
    var = sd * sd * (1.0 + (a * phi(a) - b * phi(b)) / zden
                     - ((phi(a) - phi(b)) / zden) ** 2)
    return m, math.sqrt(var)


def lognormal_cdf(x, theta, beta):
    """P(X <= x) for X lognormal with median theta and log-sd beta."""
    x = np.asarray(x, dtype=float)
    from scipy.special import erf

    return 0.5 * (1.0 + erf((np.log(x) - math.log(theta))
                            / (beta * math.sqrt(2.0))))

"""Compiled inner loops for batch hysteresis simulation and time stepping.

Everything here is a plain-number reimplementation of the scalar reference
math in :mod:`bwlab.model` and :mod:`bwlab.dynamics`, arranged for numba.
Unit tests pin the two code paths together, so any change to the rate
equations must be made in both places.

Parameter constants are passed packed in a 14-slot array:
``[alpha, f_y(m/s^2), u_y(m), beta, gamma, n, delta_nu, delta_eta,
zeta0, p, q, psi, delta_psi, lam]``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi
GRAV = 9.81

# indices into the packed constants array
_ALPHA, _FY, _UY, _BETA, _GAMMA, _N = 0, 1, 2, 3, 4, 5
_DNU, _DETA, _ZETA0, _P, _Q, _PSI, _DPSI, _LAM = 6, 7, 8, 9, 10, 11, 12, 13


@njit(cache=True)
def pack_constants(theta13):
    """Derive the packed constants array from a canonical 13-vector."""
    c = np.empty(14)
    T = theta13[0]
    fy = theta13[1] * GRAV
    c[_ALPHA] = theta13[2]
    c[_FY] = fy
    # degenerate T or F_y cannot raise here; a nan u_y makes the row fail
    # at its first advance instead of aborting the whole batch
    if T > 0.0 and fy != 0.0 and np.isfinite(T) and np.isfinite(fy):
        c[_UY] = fy / ((TWO_PI / T) ** 2)
    else:
        c[_UY] = np.nan
    c[_BETA] = theta13[3]
    c[_GAMMA] = 1.0 - theta13[3]
    c[_N] = theta13[4]
    for k in range(8):
        c[6 + k] = theta13[5 + k]
    return c


@njit(cache=True, inline="always")
def _du_rates(z, eps, sgn_v, alpha, fy, uy, beta, gamma, n, dnu, deta,
              zeta0, p, q, psi, dpsi, lam):
    """Displacement-parametrized state rates (dz/du, deps/du).

    sgn_v is the sign of the velocity, held fixed across a monotone
    displacement increment.
    """
    nu = 1.0 + dnu * eps
    eta = 1.0 + deta * eps
    zu = (1.0 / (nu * (beta + gamma))) ** (1.0 / n)
    h = 1.0
    if zeta0 != 0.0:
        zeta1 = zeta0 * (1.0 - np.exp(-p * eps))
        zeta2 = (psi + dpsi * eps) * (lam + zeta1)
        if zeta2 != 0.0:
            arg = (z * sgn_v - q * zu) / zeta2
            h = 1.0 - zeta1 * np.exp(-(arg * arg))
    zs = z * sgn_v
    if zs > 0.0:
        s = 1.0
    elif zs < 0.0:
        s = -1.0
    else:
        s = 0.0
    dz = (h / eta) * (1.0 - (np.abs(z) ** n) * (beta * s + gamma) * nu) / uy
    deps = (1.0 - alpha) * fy * z
    return dz, deps


@njit(cache=True)
def advance_state(z, eps, du, nsub, c):
    """Advance (z, eps_n) over a signed displacement increment du.

    Classical fourth-order Runge-Kutta over nsub equal sub-increments.
    Returns (nan, nan) on blow-up so callers can fail fast per sample.
    """
    alpha = c[_ALPHA]; fy = c[_FY]; uy = c[_UY]
    beta = c[_BETA]; gamma = c[_GAMMA]; n = c[_N]
    dnu = c[_DNU]; deta = c[_DETA]
    zeta0 = c[_ZETA0]; p = c[_P]; q = c[_Q]
    psi = c[_PSI]; dpsi = c[_DPSI]; lam = c[_LAM]
    sgn_v = 1.0 if du > 0.0 else -1.0
    h = du / nsub
    for _ in range(nsub):
        k1z, k1e = _du_rates(z, eps, sgn_v, alpha, fy, uy, beta, gamma, n,
                             dnu, deta, zeta0, p, q, psi, dpsi, lam)
        k2z, k2e = _du_rates(z + 0.5 * h * k1z, eps + 0.5 * h * k1e, sgn_v,
                             alpha, fy, uy, beta, gamma, n,
                             dnu, deta, zeta0, p, q, psi, dpsi, lam)
        k3z, k3e = _du_rates(z + 0.5 * h * k2z, eps + 0.5 * h * k2e, sgn_v,
                             alpha, fy, uy, beta, gamma, n,
                             dnu, deta, zeta0, p, q, psi, dpsi, lam)
        k4z, k4e = _du_rates(z + h * k3z, eps + h * k3e, sgn_v,
                             alpha, fy, uy, beta, gamma, n,
                             dnu, deta, zeta0, p, q, psi, dpsi, lam)
        z = z + (h / 6.0) * (k1z + 2.0 * (k2z + k3z) + k4z)
        eps = eps + (h / 6.0) * (k1e + 2.0 * (k2e + k3e) + k4e)
        if not (np.isfinite(z) and np.isfinite(eps)) or np.abs(z) > 1e8:
            return np.nan, np.nan
    return z, eps


@njit(cache=True)
def quasi_static_batch(theta, disp, substeps):
    """Simulate N parameter sets over N displacement series in one call.

    theta: (N, 13) canonical parameter rows (F_y in g).
    disp:  (N, M) displacement points in meters, disp[:, 0] == 0.

    Returns (f, z, eps, fail): response arrays shaped (N, M) and a fail
    vector holding the first bad step index per row (-1 when clean).
    Rows keep zeros from the failure index on.
    """
    n_rows, n_pts = disp.shape
    f = np.zeros((n_rows, n_pts))
    z_out = np.zeros((n_rows, n_pts))
    e_out = np.zeros((n_rows, n_pts))
    fail = np.full(n_rows, -1, dtype=np.int64)
    for i in range(n_rows):
        c = pack_constants(theta[i])
        alpha = c[_ALPHA]; fy = c[_FY]
        k0 = fy / c[_UY]
        z = 0.0
        eps = 0.0
        for j in range(1, n_pts):
            du = disp[i, j] - disp[i, j - 1]
            if du != 0.0:
                z, eps = advance_state(z, eps, du, substeps, c)
            fj = alpha * k0 * disp[i, j] + (1.0 - alpha) * fy * z
            if not (np.isfinite(z) and np.isfinite(eps) and np.isfinite(fj)):
                fail[i] = j
                break
            f[i, j] = fj
            z_out[i, j] = z
            e_out[i, j] = eps
    return f, z_out, e_out, fail


@njit(cache=True)
def newmark_hysteretic(theta13, ag_si, dt, xi, nsub, tol, max_iter):
    """Average-acceleration time stepping of u'' + 2 xi w u' + f_s(u, z) = -a_g.

    Per unit mass throughout. Each ground-motion interval dt is split into
    nsub sub-intervals with linear interpolation of a_g. The displacement
    at each sub-step is found by Newton iteration on the dynamic residual;
    the hysteretic state is advanced by RK4 over the trial increment with
    sub-increments no longer than 0.025 u_y.

    Returns (t, u, v, a, z, eps, fail) at the sub-interval grid. fail is
    the first sub-step index where iteration failed or the state blew up
    (-1 when clean); arrays keep zeros from there on.
    """
    c = pack_constants(theta13)
    alpha = c[_ALPHA]; fy = c[_FY]; uy = c[_UY]
    beta = c[_BETA]; gamma = c[_GAMMA]; n = c[_N]
    dnu = c[_DNU]; deta = c[_DETA]
    zeta0 = c[_ZETA0]; p = c[_P]; q = c[_Q]
    psi = c[_PSI]; dpsi = c[_DPSI]; lam = c[_LAM]
    k0 = fy / uy
    w = np.sqrt(k0)
    cd = 2.0 * xi * w
    n_in = ag_si.shape[0]
    n_pts = (n_in - 1) * nsub + 1
    h = dt / nsub
    t = np.empty(n_pts)
    u = np.zeros(n_pts)
    v = np.zeros(n_pts)
    a = np.zeros(n_pts)
    z_out = np.zeros(n_pts)
    e_out = np.zeros(n_pts)
    fail = -1
    t[0] = 0.0
    a[0] = -ag_si[0]
    z = 0.0
    eps = 0.0
    for j in range(1, n_pts):
        t[j] = j * h
        k = (j - 1) // nsub
        frac = (j - k * nsub) / nsub
        agj = ag_si[k] * (1.0 - frac) + ag_si[k + 1] * frac
        u0 = u[j - 1]
        v0 = v[j - 1]
        a0 = a[j - 1]
        u1 = u0 + h * v0 + 0.5 * h * h * a0
        z1 = z
        e1 = eps
        done = False
        for _ in range(max_iter):
            du = u1 - u0
            if du != 0.0:
                nz = int(np.ceil(np.abs(du) / (0.025 * uy)))
                if nz < 1:
                    nz = 1
                elif nz > 1000:
                    nz = 1000
                z1, e1 = advance_state(z, eps, du, nz, c)
            else:
                z1 = z
                e1 = eps
            if not (np.isfinite(z1) and np.isfinite(e1)) or np.abs(u1) > 1e4:
                fail = j
                break
            a1 = 4.0 * (u1 - u0 - h * v0) / (h * h) - a0
            v1 = v0 + 0.5 * h * (a0 + a1)
            fs = alpha * k0 * u1 + (1.0 - alpha) * fy * z1
            r = a1 + cd * v1 + fs + agj
            if np.abs(r) <= tol:
                done = True
                break
            sgn_v = 1.0 if du >= 0.0 else -1.0
            dz_du, _ = _du_rates(z1, e1, sgn_v, alpha, fy, uy, beta, gamma, n,
                                 dnu, deta, zeta0, p, q, psi, dpsi, lam)
            jac = 4.0 / (h * h) + 2.0 * cd / h + alpha * k0 + (1.0 - alpha) * fy * dz_du
            u1 = u1 - r / jac
        if fail >= 0:
            break
        if not done:
            fail = j
            break
        u[j] = u1
        a[j] = 4.0 * (u1 - u0 - h * v0) / (h * h) - a0
        v[j] = v0 + 0.5 * h * (a0 + a[j])
        z = z1
        eps = e1
        z_out[j] = z
        e_out[j] = eps
    return t, u, v, a, z_out, e_out, fail


@njit(cache=True)
def newmark_linear(ag_si, dt, w, xi, nsub):
    """Average-acceleration response of a linear oscillator, closed form.

    Returns the displacement series on the sub-interval grid.
    """
    cd = 2.0 * xi * w
    n_in = ag_si.shape[0]
    n_pts = (n_in - 1) * nsub + 1
    h = dt / nsub
    u = np.zeros(n_pts)
    v = 0.0
    a = -ag_si[0]
    denom = 1.0 + 0.5 * h * cd + 0.25 * h * h * w * w
    for j in range(1, n_pts):
        k = (j - 1) // nsub
        frac = (j - k * nsub) / nsub
        agj = ag_si[k] * (1.0 - frac) + ag_si[k + 1] * frac
        u0 = u[j - 1]
        up = u0 + h * v + 0.25 * h * h * a
        vp = v + 0.5 * h * a
        a1 = -(agj + cd * vp + w * w * up) / denom
        u[j] = up + 0.25 * h * h * a1
        v = vp + 0.5 * h * a1
        a = a1
    return u

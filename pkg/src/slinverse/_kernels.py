"""Compiled RK4 sweeps for ``-u'' + q u = lam u``.

All kernels take ``qs``, the potential sampled on a fine uniform grid of
spacing ``dx``; one RK4 step spans two fine cells so that the midpoint stage
lands on a sample. ``len(qs)`` must therefore be odd.

The Prüfer kernels integrate the deviation ``psi = theta - s x`` instead of
the angle itself. ``psi`` stays of the size of ``|q - mean q| / s`` so the
accumulated rounding error does not grow with the eigenvalue index.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _dev_rhs(psi, x, q, lam, s):
    # theta' - s = ((lam - q)/s - s) sin^2(theta)
    sn = math.sin(psi + s * x)
    return ((lam - q) / s - s) * sn * sn


@numba.njit(cache=True, nogil=True)
def prufer_deviation(qs, dx, lam, s, theta0):
    """``theta(1) - s`` for the scaled Prüfer angle started at ``theta0``."""
    n_steps = (qs.shape[0] - 1) // 2
    h = 2.0 * dx
    psi = theta0
    for k in range(n_steps):
        x0 = 2 * k * dx
        x1 = (2 * k + 1) * dx
        x2 = (2 * k + 2) * dx
        q0 = qs[2 * k]
        q1 = qs[2 * k + 1]
        q2 = qs[2 * k + 2]
        k1 = _dev_rhs(psi, x0, q0, lam, s)
        k2 = _dev_rhs(psi + 0.5 * h * k1, x1, q1, lam, s)
        k3 = _dev_rhs(psi + 0.5 * h * k2, x1, q1, lam, s)
        k4 = _dev_rhs(psi + h * k3, x2, q2, lam, s)
        psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(psi):
            return psi
    return psi


@numba.njit(cache=True, nogil=True)
def prufer_trace(qs, dx, lam, s, theta0, stride):
    """Angle deviation and log-amplitude every ``stride`` RK steps (x = 0 included)."""
    n_steps = (qs.shape[0] - 1) // 2
    n_out = n_steps // stride + 1
    devs = np.empty(n_out)
    logrho = np.empty(n_out)
    h = 2.0 * dx
    psi = theta0
    lr = 0.0
    devs[0] = psi
    logrho[0] = lr
    j = 1
    for k in range(n_steps):
        x0 = 2 * k * dx
        x1 = (2 * k + 1) * dx
        x2 = (2 * k + 2) * dx
        q0 = qs[2 * k]
        q1 = qs[2 * k + 1]
        q2 = qs[2 * k + 2]
        # (log rho)' = -((lam - q)/s - s) sin(theta) cos(theta)
        t = psi
        c = (lam - q0) / s - s
        th = t + s * x0
        a1 = c * math.sin(th) ** 2
        b1 = -c * math.sin(th) * math.cos(th)
        t = psi + 0.5 * h * a1
        c = (lam - q1) / s - s
        th = t + s * x1
        a2 = c * math.sin(th) ** 2
        b2 = -c * math.sin(th) * math.cos(th)
        t = psi + 0.5 * h * a2
        th = t + s * x1
        a3 = c * math.sin(th) ** 2
        b3 = -c * math.sin(th) * math.cos(th)
        t = psi + h * a3
        c = (lam - q2) / s - s
        th = t + s * x2
        a4 = c * math.sin(th) ** 2
        b4 = -c * math.sin(th) * math.cos(th)
        psi += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        lr += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if (k + 1) % stride == 0:
            devs[j] = psi
            logrho[j] = lr
            j += 1
    return devs, logrho


@numba.njit(cache=True, nogil=True)
def linear_sweep(qs, dx, lam, u_start, du_start, stride, backward):
    """Integrate the first-order system (u, u') and record every ``stride`` steps.

    With ``backward`` the sweep starts at x = 1 and outputs are still returned
    in increasing-x order.
    """
    n_steps = (qs.shape[0] - 1) // 2
    n_out = n_steps // stride + 1
    us = np.empty(n_out)
    dus = np.empty(n_out)
    h = -2.0 * dx if backward else 2.0 * dx
    u = u_start
    v = du_start
    if backward:
        us[n_out - 1] = u
        dus[n_out - 1] = v
    else:
        us[0] = u
        dus[0] = v
    j = 1
    for k in range(n_steps):
        if backward:
            i0 = qs.shape[0] - 1 - 2 * k
            i1 = i0 - 1
            i2 = i0 - 2
        else:
            i0 = 2 * k
            i1 = i0 + 1
            i2 = i0 + 2
        w0 = qs[i0] - lam
        w1 = qs[i1] - lam
        w2 = qs[i2] - lam
        ku1 = v
        kv1 = w0 * u
        ku2 = v + 0.5 * h * kv1
        kv2 = w1 * (u + 0.5 * h * ku1)
        ku3 = v + 0.5 * h * kv2
        kv3 = w1 * (u + 0.5 * h * ku2)
        ku4 = v + h * kv3
        kv4 = w2 * (u + h * ku3)
        u += h / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4)
        v += h / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4)
        if (k + 1) % stride == 0:
            if backward:
                us[n_out - 1 - j] = u
                dus[n_out - 1 - j] = v
            else:
                us[j] = u
                dus[j] = v
            j += 1
    return us, dus

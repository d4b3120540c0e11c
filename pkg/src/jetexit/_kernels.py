"""Compiled Euler-Maruyama path loops.

Each path is seeded independently, so results are identical no matter
how numba schedules the loop iterations.  Exit tests use analytic
level functions rather than anything mesh-derived: the lowest-order
interpolation of the crossing instant happens on the level value.

Output rows are (exit_time, x_exit, y_exit, side) with side 0 when the
path was still inside at the step cap, 1 when the lower level (or the
radius / bottom wall) was crossed, and 2 for the upper one.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath=True)
def band_paths(x0, y0, seeds, dt, max_steps, noise, a, c, k, psi_lo, psi_hi, out):
    n = x0.shape[0]
    for i in prange(n):
        np.random.seed(seeds[i])
        x = x0[i]
        y = y0[i]
        ch = np.cosh(y)
        s2 = 1.0 / (ch * ch)
        psi = -np.tanh(y) + a * s2 * np.cos(k * x) + c * y
        t_exit = max_steps * dt
        side = 0
        for s in range(max_steps):
            th = np.tanh(y)
            ckx = np.cos(k * x)
            u = s2 + 2.0 * a * s2 * th * ckx - c
            v = -a * k * s2 * np.sin(k * x)
            xn = x + u * dt + noise * np.random.normal()
            yn = y + v * dt + noise * np.random.normal()
            ch = np.cosh(yn)
            s2 = 1.0 / (ch * ch)
            psi_n = -np.tanh(yn) + a * s2 * np.cos(k * xn) + c * yn
            if psi_n <= psi_lo:
                theta = (psi - psi_lo) / (psi - psi_n)
                t_exit = (s + theta) * dt
                x = x + theta * (xn - x)
                y = y + theta * (yn - y)
                side = 1
                break
            if psi_n >= psi_hi:
                theta = (psi_hi - psi) / (psi_n - psi)
                t_exit = (s + theta) * dt
                x = x + theta * (xn - x)
                y = y + theta * (yn - y)
                side = 2
                break
            x = xn
            y = yn
            psi = psi_n
        out[i, 0] = t_exit
        out[i, 1] = x
        out[i, 2] = y
        out[i, 3] = side


@njit(cache=True, parallel=True, fastmath=True)
def strip_paths(x0, y0, seeds, dt, max_steps, noise, y_lo, y_hi, out):
    n = x0.shape[0]
    for i in prange(n):
        np.random.seed(seeds[i])
        x = x0[i]
        y = y0[i]
        t_exit = max_steps * dt
        side = 0
        for s in range(max_steps):
            xn = x + noise * np.random.normal()
            yn = y + noise * np.random.normal()
            if yn <= y_lo:
                theta = (y - y_lo) / (y - yn)
                t_exit = (s + theta) * dt
                x = x + theta * (xn - x)
                y = y_lo
                side = 1
                break
            if yn >= y_hi:
                theta = (y_hi - y) / (yn - y)
                t_exit = (s + theta) * dt
                x = x + theta * (xn - x)
                y = y_hi
                side = 2
                break
            x = xn
            y = yn
        out[i, 0] = t_exit
        out[i, 1] = x
        out[i, 2] = y
        out[i, 3] = side


@njit(cache=True, parallel=True, fastmath=True)
def disk_paths(x0, y0, seeds, dt, max_steps, noise, cx, cy, radius, out):
    n = x0.shape[0]
    for i in prange(n):
        np.random.seed(seeds[i])
        x = x0[i]
        y = y0[i]
        r_old = np.hypot(x - cx, y - cy)
        t_exit = max_steps * dt
        side = 0
        for s in range(max_steps):
            xn = x + noise * np.random.normal()
            yn = y + noise * np.random.normal()
            r_new = np.hypot(xn - cx, yn - cy)
            if r_new >= radius:
                theta = (radius - r_old) / (r_new - r_old)
                t_exit = (s + theta) * dt
                x = x + theta * (xn - x)
                y = y + theta * (yn - y)
                side = 1
                break
            x = xn
            y = yn
            r_old = r_new
        out[i, 0] = t_exit
        out[i, 1] = x
        out[i, 2] = y
        out[i, 3] = side

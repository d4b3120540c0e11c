"""Analytic flow field of the randomly perturbed meandering jet.

The deterministic drift derives from the stationary stream function

    Psi(x, y) = -tanh(y) + a * sech(y)**2 * cos(k*x) + c*y

in a frame co-moving with the meander.  The phase speed ``c`` and the
wavenumber ``k`` are both fixed by the planetary-vorticity parameter
``beta`` in [0, 2/3]:

    c = (1 + sqrt(1 - (3/2)*beta)) / 3,
    k = sqrt(2 * (1 + sqrt(1 - (3/2)*beta)))        (so k**2 == 6*c).

Particles drift with (u, v) = (-dPsi/dy, +dPsi/dx) and feel isotropic
white noise of intensity ``epsilon``.  All evaluators broadcast over
numpy arrays, use exact derivatives (no differencing), and are pure
functions of their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

BETA_MAX = 2.0 / 3.0

# cosh overflows near |y| ~ 710; the flow is flat far from the jet, so
# sech^2 is cut off to exactly 0 beyond this band (its true value there
# is below 1e-260 anyway).
SECH_CUTOFF = 300.0


@dataclass(frozen=True)
class JetParameters:
    """Immutable parameter set of the jet.  Build with :func:`make_params`."""

    beta: float
    a: float
    c: float
    k: float
    epsilon: float

    @property
    def period(self) -> float:
        """Zonal period 2*pi/k of the meander."""
        return 2.0 * math.pi / self.k


def make_params(beta: float, a: float = 0.01, epsilon: float = 0.001) -> JetParameters:
    """Validate (beta, a, epsilon) and derive the dependent constants c, k.

    Raises
    ------
    ParameterError
        If beta is outside [0, 2/3], a <= 0, or epsilon is outside (0, 1).
    """
    beta = float(beta)
    a = float(a)
    epsilon = float(epsilon)
    if not (0.0 <= beta <= BETA_MAX) or not math.isfinite(beta):
        raise ParameterError(f"beta must lie in [0, 2/3], got beta={beta!r}")
    if not (a > 0.0) or not math.isfinite(a):
        raise ParameterError(f"a must be positive, got a={a!r}")
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got epsilon={epsilon!r}")
    root = math.sqrt(1.0 - 1.5 * beta)
    c = (1.0 + root) / 3.0
    k = math.sqrt(2.0 * (1.0 + root))
    return JetParameters(beta=beta, a=a, c=c, k=k, epsilon=epsilon)


def _sech2_tanh(y):
    """Return (sech(y)**2, tanh(y)) with the overflow cutoff applied."""
    y = np.asarray(y, dtype=float)
    t = np.tanh(y)
    s2 = 1.0 - t * t
    big = np.abs(y) > SECH_CUTOFF
    if np.any(big):
        s2 = np.where(big, 0.0, s2)
    return s2, t


def stream_function(p: JetParameters, x, y):
    """Evaluate Psi(x, y); broadcasts over array input."""
    x = np.asarray(x, dtype=float)
    s2, t = _sech2_tanh(y)
    y = np.asarray(y, dtype=float)
    out = -t + p.a * s2 * np.cos(p.k * x) + p.c * y
    return out if out.ndim else float(out)

def velocity(p: JetParameters, x, y):
    """Drift (u, v) = (-dPsi/dy, +dPsi/dx) at (x, y).

    Far from the jet the drift tends to the retrograde value (-c, 0).
    """
    x = np.asarray(x, dtype=float)
    s2, t = _sech2_tanh(y)
    ckx = np.cos(p.k * x)
    skx = np.sin(p.k * x)
    u = s2 + 2.0 * p.a * s2 * t * ckx - p.c
    v = -p.a * p.k * s2 * skx
    if u.ndim:
        return u, v
    return float(u), float(v)


def velocity_jacobian(p: JetParameters, x, y):
    """Exact Jacobian of the drift, shape (..., 2, 2).

    Entry [i, j] is the derivative of velocity component i with respect
    to coordinate j.  The trace vanishes identically (the flow is
    divergence free), which holds exactly in floating point because the
    two diagonal entries are the same product with opposite signs.
    """
    x = np.asarray(x, dtype=float)
    s2, t = _sech2_tanh(y)
    ckx = np.cos(p.k * x)
    skx = np.sin(p.k * x)
    ast = 2.0 * p.a * p.k * s2 * t * skx
    u_x = -ast
    u_y = -2.0 * s2 * t + 2.0 * p.a * ckx * s2 * (s2 - 2.0 * t * t)
    v_x = -p.a * p.k * p.k * s2 * ckx
    v_y = ast
    jac = np.stack(
        [np.stack([u_x, u_y], axis=-1), np.stack([v_x, v_y], axis=-1)], axis=-2
    )
    return jac


def velocity_fn(p: JetParameters):
    """Drift as a callable (x, y) -> (u, v) for assembly and sampling."""

    def drift(x, y):
        return velocity(p, x, y)

    return drift


def zero_velocity(x, y):
    """Zero drift hook for pure-diffusion test problems."""
    x = np.asarray(x, dtype=float)
    z = np.zeros(np.broadcast(x, np.asarray(y, dtype=float)).shape)
    return z, z.copy()

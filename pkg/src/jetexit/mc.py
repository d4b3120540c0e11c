"""First-exit Monte Carlo, independent of the mesh and solver layers.

Paths follow the Euler-Maruyama scheme for the drift-plus-noise motion
whose generator matches the elliptic operator the solver discretizes:
per component the step noise is sqrt(2 * epsilon * dt) * N(0, 1), so a
diffusion coefficient epsilon multiplies the full Laplacian.  Exit is
detected on analytic level functions (stream-function bands for the
flow domains, walls and circles for the synthetic ones), never on the
triangulation, which keeps this module a genuinely independent check.

Each path owns a private generator seeded from one master seed, so a
run is reproducible bit for bit regardless of scheduling.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .domains import GAMMA_LOWER, GAMMA_UPPER, KIND_EDDY, MARKER_CODE, MARKERS
from .errors import CensoringError, ParameterError
from .flowfield import JetParameters

DEFAULT_DT = 1e-3


def _apply_thread_cap():
    cap = os.environ.get("JETEXIT_THREADS")
    if cap:
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


def _path_seeds(seed, n_paths):
    return np.random.SeedSequence(seed).generate_state(n_paths, dtype=np.uint32)


@dataclass
class ExitStatistics:
    """Exit counts and timing for one batch of paths."""

    start: tuple | None
    n_paths: int
    exit_counts: dict
    censored: int
    mean_exit_time: float
    std_err_time: float
    std_err_prob: dict
    rng_seed: int
    dt: float
    max_time: float
    exit_x: np.ndarray = field(repr=False, default=None)
    exit_y: np.ndarray = field(repr=False, default=None)

    def probability(self, marker):
        return self.exit_counts.get(marker, 0) / self.n_paths

    def to_dict(self):
        return {
            "start": list(self.start) if self.start is not None else None,
            "n_paths": self.n_paths,
            "exit_counts": dict(self.exit_counts),
            "censored": self.censored,
            "mean_exit_time": self.mean_exit_time,
            "std_err_time": self.std_err_time,
            "std_err_prob": dict(self.std_err_prob),
            "rng_seed": self.rng_seed,
            "dt": self.dt,
            "max_time": self.max_time,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def _default_max_time(p, domain):
    # crude diffusive bound; callers with a solver estimate pass 10x that instead
    return 10.0 * domain.area / (4.0 * p.epsilon)


def _run_kernel(p, domain, x0, y0, seeds, dt, max_steps):
    spec = domain.mc_spec()
    noise = math.sqrt(2.0 * p.epsilon * dt)
    out = np.empty((len(x0), 4))
    _apply_thread_cap()
    if spec["tag"] == "jet_band":
        _kernels.band_paths(
            x0, y0, seeds, dt, max_steps, noise,
            spec["a"], spec["c"], spec["k"], spec["psi_lo"], spec["psi_hi"], out,
        )
    elif spec["tag"] == "strip":
        _kernels.strip_paths(
            x0, y0, seeds, dt, max_steps, noise, spec["y0"], spec["y1"], out,
        )
    elif spec["tag"] == "disk":
        _kernels.disk_paths(
            x0, y0, seeds, dt, max_steps, noise,
            spec["cx"], spec["cy"], spec["radius"], out,
        )
    else:
        raise ParameterError(f"no path kernel for tag {spec['tag']!r}")
    return out


def _classify_exits(domain, out):
    """Map kernel side codes to boundary markers, path by path."""
    spec = domain.mc_spec()
    side = out[:, 3].astype(int)
    markers = np.zeros(len(out), dtype=np.uint8)
    hit = side > 0
    if spec["tag"] == "jet_band" and domain.kind == KIND_EDDY:
        # one closed level curve; which chain was hit is a question of
        # which side of the interior critical line the path ended on
        x = out[hit, 1]
        if domain.period:
            ctr = domain.center[0]
            x = x - domain.period * np.round((x - ctr) / domain.period)
        markers[hit] = domain.exit_markers(x, out[hit, 2])
    elif spec["tag"] == "jet_band":
        # side 1 = crossed psi_lo; for the core that is the northern chain
        # (psi decreases northward across the jet), i.e. the upper boundary
        lut = np.array([0, MARKER_CODE[GAMMA_UPPER], MARKER_CODE[GAMMA_LOWER]], dtype=np.uint8)
        markers[hit] = lut[side[hit]]
    elif spec["tag"] == "strip":
        # side 1 = hit the bottom wall y0
        lut = np.array([0, MARKER_CODE[GAMMA_LOWER], MARKER_CODE[GAMMA_UPPER]], dtype=np.uint8)
        markers[hit] = lut[side[hit]]
    else:  # disk
        markers[hit] = domain.exit_markers(out[hit, 1], out[hit, 2])
    return markers


def simulate_first_exit(
    p: JetParameters,
    domain,
    start,
    dt: float = DEFAULT_DT,
    n_paths: int = 10_000,
    seed: int = 0,
    max_time: float | None = None,
    allow_censoring: bool = False,
) -> ExitStatistics:
    """First-exit statistics for ``n_paths`` trajectories from ``start``."""
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    if n_paths < 1:
        raise ParameterError("need at least one path")
    x_start, y_start = float(start[0]), float(start[1])
    if not domain.contains(x_start, y_start):
        raise ParameterError(f"start point {(x_start, y_start)} is not inside the domain")
    if max_time is None:
        max_time = _default_max_time(p, domain)
    max_steps = int(math.ceil(max_time / dt))

    x0 = np.full(n_paths, x_start)
    y0 = np.full(n_paths, y_start)
    seeds = _path_seeds(seed, n_paths)
    out = _run_kernel(p, domain, x0, y0, seeds, dt, max_steps)
    return _collect(domain, out, (x_start, y_start), seed, dt, max_time, allow_censoring)


def uniform_starts(domain, n, seed=0):
    """Rejection-sample start points uniformly over the domain interior."""
    x0, x1, y0, y1 = domain.bbox()
    rng = np.random.default_rng(seed)
    xs = np.empty(n)
    ys = np.empty(n)
    have = 0
    while have < n:
        m = max(2 * (n - have), 64)
        cx = rng.uniform(x0, x1, m)
        cy = rng.uniform(y0, y1, m)
        keep = domain.contains(cx, cy)
        take = min(n - have, int(keep.sum()))
        xs[have:have + take] = cx[keep][:take]
        ys[have:have + take] = cy[keep][:take]
        have += take
    return xs, ys


def simulate_uniform_exit(
    p, domain, dt=DEFAULT_DT, n_paths=10_000, seed=0,
    max_time=None, allow_censoring=False,
):
    """Exit statistics from uniformly distributed starts (average escape)."""
    if max_time is None:
        max_time = _default_max_time(p, domain)
    xs, ys = uniform_starts(domain, n_paths, seed)
    seeds = _path_seeds(seed + 1, n_paths)
    max_steps = int(math.ceil(max_time / dt))
    out = _run_kernel(p, domain, xs, ys, seeds, dt, max_steps)
    return _collect(domain, out, None, seed, dt, max_time, allow_censoring)


def _collect(domain, out, start, seed, dt, max_time, allow_censoring):
    markers = _classify_exits(domain, out)
    n_paths = len(out)
    censored = int(np.count_nonzero(out[:, 3] == 0))
    if censored and not allow_censoring:
        raise CensoringError(censored, n_paths, max_time)

    counts = {}
    errs = {}
    for name in MARKERS:
        c = int(np.count_nonzero(markers == MARKER_CODE[name]))
        counts[name] = c
        phat = c / n_paths
        errs[name] = math.sqrt(phat * (1.0 - phat) / n_paths)

    done = out[:, 3] > 0
    times = out[done, 0]
    if len(times):
        mean_t = float(times.mean())
        se_t = float(times.std(ddof=1) / math.sqrt(len(times))) if len(times) > 1 else math.inf
    else:
        mean_t, se_t = math.nan, math.nan

    return ExitStatistics(
        start=start,
        n_paths=n_paths,
        exit_counts=counts,
        censored=censored,
        mean_exit_time=mean_t,
        std_err_time=se_t,
        std_err_prob=errs,
        rng_seed=seed,
        dt=dt,
        max_time=float(max_time),
        exit_x=out[:, 1].copy(),
        exit_y=out[:, 2].copy(),
    )


def dt_convergence_study(p, domain, start, dts, n_paths=10_000, seed=0, max_time=None):
    """Repeat the exit run over a decreasing dt ladder and compare rungs.

    Two consecutive rungs "agree" when both the upper-exit fraction and
    the mean exit time differ by less than the combined two-sigma
    statistical error; the report marks the first dt from which every
    later rung agrees with its neighbour.
    """
    dts = list(dts)
    if len(dts) > 1 and any(dts[i + 1] >= dts[i] for i in range(len(dts) - 1)):
        raise ParameterError("dts must be strictly decreasing")
    rows = []
    for i, dt in enumerate(dts):
        st = simulate_first_exit(
            p, domain, start, dt=dt, n_paths=n_paths, seed=seed + i,
            max_time=max_time,
        )
        rows.append(
            {
                "dt": dt,
                "p_upper": st.probability(GAMMA_UPPER),
                "se_p": st.std_err_prob[GAMMA_UPPER],
                "mean_time": st.mean_exit_time,
                "se_t": st.std_err_time,
            }
        )
    agrees = []
    for a, b in zip(rows, rows[1:]):
        dp = abs(a["p_upper"] - b["p_upper"])
        ep = 2.0 * math.hypot(a["se_p"], b["se_p"])
        dtm = abs(a["mean_time"] - b["mean_time"])
        et = 2.0 * math.hypot(a["se_t"], b["se_t"])
        agrees.append(dp <= ep and dtm <= et)
    converged_dt = None
    for i in range(len(agrees)):
        if all(agrees[i:]):
            converged_dt = rows[i]["dt"]
            break
    return {"rows": rows, "pairwise_agreement": agrees, "converged_dt": converged_dt}

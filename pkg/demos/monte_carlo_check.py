"""Direct simulation against the solver at a single probe point.

Runs the Euler-Maruyama simulator from the eddy center and compares
the exit statistics with the finite element fields sampled at the same
point.  Agreement is judged in standard errors of the simulation.
"""

import time

import numpy as np

from jetexit import make_params, build_eddy_domain, solve_domain_suite, Resolution
from jetexit import simulate_first_exit

p = make_params(1.0 / 3.0)
eddy = build_eddy_domain(p)
suite = solve_domain_suite(p, eddy, Resolution(eddy=(24, 160), refinements=1))

start = eddy.center
print(f"probe at the eddy center {tuple(round(v, 4) for v in start)}")

fem_p = float(np.atleast_1d(suite.escape_upper.field.sample([start]))[0])
fem_t = float(np.atleast_1d(suite.mrt.sample([start]))[0])

t0 = time.perf_counter()
stats = simulate_first_exit(p, eddy, start, dt=5e-4, n_paths=20_000, seed=42,
                            max_time=15.0 * suite.mrt_max)
elapsed = time.perf_counter() - t0

mc_p = stats.probability("gamma_upper")
se_p = stats.std_err_prob["gamma_upper"]
print(f"{stats.n_paths} paths in {elapsed:.1f} s, none censored" if stats.censored == 0
      else f"{stats.n_paths} paths, {stats.censored} censored")
print(f"P(exit upper): fem {fem_p:.4f}   mc {mc_p:.4f} +/- {se_p:.4f}   "
      f"|z| = {abs(fem_p - mc_p) / se_p:.2f}")
print(f"exit time:     fem {fem_t:.4f}   mc {stats.mean_exit_time:.4f} +/- {stats.std_err_time:.4f}   "
      f"|z| = {abs(fem_t - stats.mean_exit_time) / stats.std_err_time:.2f}")

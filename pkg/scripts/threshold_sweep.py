"""Sweep the boundary value lambda across two worked families and locate
the admissibility flip, comparing it with the closed-form thresholds.

Run:  python3 scripts/threshold_sweep.py
"""

import math

import numpy as np

from phibvp import (
    check_theorem1,
    example_condition,
    load_problem_config,
    parse_config,
    solve,
)

PERONA = """
[operator]
name = perona_malik

[weight]
name = constant
value = 1.0

[rhs]
example = perona
alpha = 4.0

[problem]
nu1 = 0.0
nu2 = 0.05
T = 1.0

[mesh]
n = 400
"""

PLAPLACIAN = """
[operator]
name = r_laplacian
r = 2.0

[weight]
name = constant
value = 1.0

[rhs]
example = plaplacian
p = 2.0
beta = 4.0
N = 1.0

[problem]
nu1 = 0.0
nu2 = 0.3
T = 1.0

[mesh]
n = 400
"""


def sweep(name, config_text, lams, closed_form):
    cfg = load_problem_config(parse_config(config_text))
    print(f"\n== {name}: closed-form threshold {closed_form:.9f}")
    print(f"{'lambda':>9}  {'check':>6}  {'solve':>10}  {'residual':>11}")
    last_pass, first_fail = None, None
    for lam in lams:
        problem = cfg.build_finite(nu2_override=float(lam))
        verdict = check_theorem1(problem).overall
        status, residual = "-", float("nan")
        if verdict == "pass":
            report = solve(problem)
            status, residual = report.status, report.residual
            last_pass = lam
        elif first_fail is None:
            first_fail = lam
        print(f"{lam:9.4f}  {verdict:>6}  {status:>10}  {residual:11.3e}")
    if last_pass is not None and first_fail is not None:
        mid = 0.5 * (last_pass + first_fail)
        print(
            f"flip between {last_pass:.4f} and {first_fail:.4f} "
            f"(midpoint {mid:.4f}, closed form {closed_form:.4f})"
        )


def main():
    perona_threshold = example_condition("perona", 0.0, alpha=4.0).bound
    assert abs(perona_threshold - (5.0 - 2.0 * math.sqrt(6.0))) < 1e-12
    sweep(
        "perona-malik, alpha = 4",
        PERONA,
        np.arange(0.080, 0.1225, 0.0025),
        perona_threshold,
    )
    sweep(
        "p-laplacian growth, p = 2, beta = 4",
        PLAPLACIAN,
        np.arange(0.30, 0.4525, 0.0025),
        0.375,
    )


if __name__ == "__main__":
    main()

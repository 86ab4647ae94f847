"""Heteroclinic connections on [0, +inf) by exhaustion of [0, n].

Solving the Dirichlet problem on a growing schedule of intervals [0, n_j]
and extending each solution by nu2 yields a sequence whose uniform gaps
contract when 1/k and psi are integrable on the half-line; the limit
connects x(0) = nu1 to x(+inf) = nu2.  This module runs the schedule,
seeds each interval with the extension of the previous solution, and
monitors the gap sequence together with the uniform slope and offset
bounds that justify the limit passage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidInputError, PhibvpError
from .grid import GridFunction, integrate
from .operators import MonotoneBranch, PhiOperator, partial_inverse
from .problem import BvpProblem, Rhs, Weight, default_mesh
from .solver import IterationConfig, SolveReport, solve

# Numeric half-line integrals stop here; the last decade is reported as a
# truncation proxy so callers can tell a vanishing tail from a fat one.
TAIL_CUTOFF = 1.0e6

DEFAULT_SCHEDULE = (5.0, 10.0, 20.0, 40.0, 80.0, 160.0)


def halfline_integral(fn: Callable, cutoff: float = TAIL_CUTOFF) -> tuple[float, float]:
    """Integral of fn over [0, cutoff] plus the mass of the last decade.

    Linear nodes cover [0, 1]; geometric nodes cover [1, cutoff].  Values
    that evaluate non-finite (isolated singularities) are dropped from
    the quadrature, so use exact antiderivatives where accuracy matters.
    """
    if not (cutoff > 10.0 and math.isfinite(cutoff)):
        raise InvalidInputError("cutoff must be finite and exceed 10")
    head = np.linspace(0.0, 1.0, 2001)
    tail = np.geomspace(1.0, float(cutoff), 12001)[1:]
    t = np.concatenate([head, tail])
    with np.errstate(all="ignore"):
        v = np.asarray(fn(t), dtype=float)
    v = np.where(np.isfinite(v), v, 0.0)
    seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
    total = float(np.sum(seg))
    tail_mass = float(np.sum(seg[t[:-1] >= cutoff / 10.0]))
    return total, tail_mass


def k_mass_upto(weight: Weight, t: float, cells: int = 4000) -> float:
    """||1/k||_L1 over [0, t], exact when the antiderivative is known."""
    if not (t > 0 and math.isfinite(t)):
        raise InvalidInputError("t must be positive and finite")
    K = weight.recip_antiderivative
    if K is not None:
        val = float(K(float(t))) - float(K(0.0))
        if math.isfinite(val):
            return val
    mesh = default_mesh(weight, float(t), n=cells)
    return float(integrate(GridFunction.from_callable(mesh, weight.recip, fill=0.0)))


@dataclass(frozen=True, eq=False)
class HalflineProblem:
    """Dirichlet data at 0 and +inf plus the interval exhaustion schedule.

    k_infinity and psi_l1 optionally pin the half-line masses of 1/k and
    psi exactly; otherwise the weight's recip_total or a truncated
    numeric integral stands in.
    """

    phi: PhiOperator
    branch: MonotoneBranch
    weight: Weight
    rhs: Rhs
    nu1: float
    nu2: float
    schedule: tuple[float, ...] = DEFAULT_SCHEDULE
    tol_h: float = 1e-3
    cells_per_unit: int = 200
    p: float = 1.0
    k_infinity: float | None = None
    psi_l1: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.schedule, dtype=float)
        if arr.size < 2:
            raise InvalidInputError("schedule needs at least two intervals")
        if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
            raise InvalidInputError("schedule entries must be positive and finite")
        if not np.all(np.diff(arr) > 0):
            raise InvalidInputError("schedule must be strictly increasing")
        if not (self.tol_h > 0 and math.isfinite(self.tol_h)):
            raise InvalidInputError("tol_h must be positive")
        if self.cells_per_unit < 1:
            raise InvalidInputError("cells_per_unit must be at least 1")
        for v in (self.nu1, self.nu2):
            if not math.isfinite(v):
                raise InvalidInputError("boundary values must be finite")
        if not (self.p >= 1.0):
            raise InvalidInputError("p must satisfy p >= 1")
        if self.k_infinity is not None and not (
            self.k_infinity > 0 and math.isfinite(self.k_infinity)
        ):
            raise InvalidInputError("k_infinity must be positive and finite")
        if self.psi_l1 is not None and not (
            self.psi_l1 >= 0 and math.isfinite(self.psi_l1)
        ):
            raise InvalidInputError("psi_l1 must be nonnegative and finite")


def recip_mass(hp: HalflineProblem) -> tuple[float, float]:
    """(||1/k||_L1 over the half-line, truncation proxy)."""
    if hp.k_infinity is not None:
        return hp.k_infinity, 0.0
    total = hp.weight.recip_total
    if total is not None and math.isfinite(total):
        return float(total), 0.0
    return halfline_integral(hp.weight.recip)


def psi_mass(hp: HalflineProblem) -> tuple[float, float]:
    """(||psi||_L1 over the half-line, truncation proxy)."""
    if hp.psi_l1 is not None:
        return hp.psi_l1, 0.0
    return halfline_integral(hp.rhs.psi_at)


def extend_by_nu2(x_on_interval: GridFunction, eval_points) -> np.ndarray:
    """Evaluate x on [0, n] by linear interpolation, constant beyond n.

    The extension constant is the final nodal value, which a converged
    interval solve pins to nu2.
    """
    pts = np.asarray(eval_points, dtype=float)
    if np.any(pts < 0.0):
        raise DomainError("evaluation points must be nonnegative")
    return np.interp(pts, x_on_interval.mesh.nodes, x_on_interval.values)


@dataclass(frozen=True, eq=False)
class IntervalRun:
    """One interval of the schedule with its diagnostics."""

    n: float
    k_n: float
    s_star_n: float
    report: SolveReport
    gap: float | None
    envelope_excess: float
    offset_excess: float


@dataclass(frozen=True, eq=False)
class HeteroclinicReport:
    status: str  # "converged" | "schedule-exhausted" | "aborted"
    runs: tuple[IntervalRun, ...]
    gaps: tuple[tuple[float, float], ...]  # (interval label n_j, gap value)
    x_final: GridFunction | None
    tail_value: float
    tail_defect: float
    k_infinity: float
    k_tail_estimate: float
    s_star_infinity: float
    ell_infinity: float
    psi_tail_estimate: float
    slope_box_lo: float
    slope_box_hi: float
    offset_bound: float
    uniform_envelope_ok: bool
    uniform_offset_ok: bool
    detail: str = ""


def _interval_problem(hp: HalflineProblem, n: float) -> BvpProblem:
    cells = max(2, int(round(hp.cells_per_unit * float(n))))
    mesh = default_mesh(hp.weight, float(n), n=cells)
    return BvpProblem(
        hp.phi, hp.branch, hp.weight, hp.rhs, hp.nu1, hp.nu2, float(n), p=hp.p, mesh=mesh
    )


def _gap(prev: GridFunction, cur: GridFunction) -> float:
    # both extensions are piecewise linear, so the sup of the difference
    # is attained on the union of the breakpoints
    pts = np.union1d(prev.mesh.nodes, cur.mesh.nodes)
    return float(np.max(np.abs(extend_by_nu2(prev, pts) - extend_by_nu2(cur, pts))))


def _uniform_bounds(
    hp: HalflineProblem, k_inf: float, ell_inf: float, s_inf: float
) -> tuple[float, float, float] | None:
    """Slope box [lo, hi] for k x' and offset bound C, or None if the
    half-line margins fail (the box is then not defined)."""
    if not (math.isfinite(k_inf) and k_inf > 0 and math.isfinite(ell_inf)):
        return None
    if not hp.branch.contains(s_inf):
        return None
    try:
        phi_s = float(hp.phi.fn(s_inf))
        a = partial_inverse(hp.phi, hp.branch, phi_s - 2.0 * ell_inf)
        b = partial_inverse(hp.phi, hp.branch, phi_s + 2.0 * ell_inf)
    except PhibvpError:
        return None
    lo, hi = (a, b) if a <= b else (b, a)
    return lo, hi, k_inf * (abs(a) + abs(b))


def _uniform_excess(
    problem: BvpProblem,
    report: SolveReport,
    bounds: tuple[float, float, float] | None,
) -> tuple[float, float]:
    if bounds is None:
        return math.inf, math.inf
    lo, hi, offset = bounds
    nodes = problem.mesh.nodes
    ok = ~problem.mesh.singular_mask()
    kv = np.asarray(problem.weight(nodes), dtype=float)
    slopes = kv[ok] * report.x_prime.values[ok]
    env = max(0.0, lo - float(np.min(slopes)), float(np.max(slopes)) - hi)
    off = max(0.0, float(np.max(np.abs(report.x.values - problem.nu1))) - offset)
    return env, off


def solve_halfline(
    hp: HalflineProblem, config: IterationConfig | None = None
) -> HeteroclinicReport:
    """Run the interval schedule until successive extensions agree.

    Each interval is solved with the previous extension as the initial
    iterate; the first gap at or below tol_h stops the schedule.  A
    per-interval solve that does not converge aborts the schedule with
    the partial report.
    """
    cfg = config if config is not None else IterationConfig()
    k_inf, k_tail = recip_mass(hp)
    ell_inf, psi_tail = psi_mass(hp)
    s_inf = (hp.nu2 - hp.nu1) / k_inf if (math.isfinite(k_inf) and k_inf > 0) else 0.0
    bounds = _uniform_bounds(hp, k_inf, ell_inf, s_inf)

    runs: list[IntervalRun] = []
    gaps: list[tuple[float, float]] = []
    prev: SolveReport | None = None
    prev_n = math.nan
    prev_k = -math.inf
    prev_abs_s = math.inf
    status = "schedule-exhausted"
    detail = ""

    for n in hp.schedule:
        problem = _interval_problem(hp, n)
        k_n = k_mass_upto(hp.weight, float(n))
        s_n = (hp.nu2 - hp.nu1) / k_n
        if not (k_n > prev_k):
            raise InvalidInputError("interval mass k_n failed to increase")
        if abs(s_n) > prev_abs_s + 1e-15 * (1.0 + abs(s_n)):
            raise InvalidInputError("interval slope |s_n*| failed to decrease")
        prev_k, prev_abs_s = k_n, abs(s_n)

        initial = None
        if prev is not None:
            nodes = problem.mesh.nodes
            x0 = extend_by_nu2(prev.x, nodes)
            mask = ~prev.x.mesh.singular_mask()
            xp0 = np.interp(nodes, prev.x.mesh.nodes[mask], prev.x_prime.values[mask])
            xp0 = np.where(nodes > prev.x.mesh.nodes[-1], 0.0, xp0)
            initial = (x0, xp0)

        try:
            rep = solve(problem, cfg, initial=initial)
        except PhibvpError as exc:
            status = "aborted"
            detail = f"interval [0, {n:g}]: {exc}"
            break
        env_ex, off_ex = _uniform_excess(problem, rep, bounds)
        gap = None
        if prev is not None:
            gap = _gap(prev.x, rep.x)
            gaps.append((float(prev_n), gap))
        runs.append(
            IntervalRun(
                n=float(n),
                k_n=k_n,
                s_star_n=s_n,
                report=rep,
                gap=gap,
                envelope_excess=env_ex,
                offset_excess=off_ex,
            )
        )
        if rep.status != "converged":
            status = "aborted"
            detail = f"interval [0, {n:g}]: solver status {rep.status!r}"
            break
        if gap is not None and gap <= hp.tol_h:
            status = "converged"
            break
        prev, prev_n = rep, n

    x_final = runs[-1].report.x if runs else None
    tail_value = float(x_final.values[-1]) if x_final is not None else math.nan
    tail_defect = abs(tail_value - hp.nu2) if x_final is not None else math.nan
    env_tol = 1e-8 * (1.0 + (abs(bounds[0]) + abs(bounds[1]) if bounds else 0.0))
    finished = status != "aborted" and bool(runs)
    env_ok = finished and bounds is not None and all(
        r.envelope_excess <= env_tol for r in runs
    )
    off_ok = finished and bounds is not None and all(
        r.offset_excess <= env_tol for r in runs
    )
    if bounds is None and not detail:
        detail = "uniform slope box unavailable (half-line margins fail)"
    return HeteroclinicReport(
        status=status,
        runs=tuple(runs),
        gaps=tuple(gaps),
        x_final=x_final,
        tail_value=tail_value,
        tail_defect=tail_defect,
        k_infinity=k_inf,
        k_tail_estimate=k_tail,
        s_star_infinity=s_inf,
        ell_infinity=ell_inf,
        psi_tail_estimate=psi_tail,
        slope_box_lo=bounds[0] if bounds else math.nan,
        slope_box_hi=bounds[1] if bounds else math.nan,
        offset_bound=bounds[2] if bounds else math.nan,
        uniform_envelope_ok=env_ok,
        uniform_offset_ok=off_ok,
        detail=detail,
    )

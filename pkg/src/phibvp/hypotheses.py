"""Machine checks for the sufficient existence conditions.

Each checker evaluates one set of conditions and returns a report built
from per-condition items: a violated inequality is a verdict, never an
exception.  Universal quantifications over (t, x, y) are sampled on a
lattice and can earn at most "sampled-pass"; the max observed ratio
|f| / psi is always reported so near-misses are visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateExponentError,
    InvalidInputError,
    WrongCorollaryError,
)
from .grid import GridFunction, NormSpec, integrate, norm
from .halfline import HalflineProblem, k_mass_upto, psi_mass, recip_mass
from .operators import partial_inverse
from .problem import BvpProblem, Rhs, derive_scalars, recip_weight_grid

PASS = "pass"
FAIL = "fail"
SAMPLED = "sampled-pass"
INCONCLUSIVE = "inconclusive"

DEFAULT_LATTICE = (50, 20, 20)
# geometric probe times for the tail limit of psi(t) k(t)
TAIL_PROBES = (1.0e2, 1.0e3, 1.0e4, 1.0e5)
TAIL_SPREAD_TOL = 1e-3
# witness grid for the odd-operator half-line shortcut
T_WITNESS_GRID = tuple(float(2**j) for j in range(11))
# slack for sampled inequalities: strict failures only
RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class CheckItem:
    """One hypothesis with its verdict and the numbers behind it."""

    name: str
    verdict: str
    quantities: tuple[tuple[str, float], ...] = ()
    detail: str = ""

    def quantity(self, key: str) -> float:
        for k, v in self.quantities:
            if k == key:
                return v
        raise KeyError(key)


@dataclass(frozen=True)
class HypothesisReport:
    theorem: str  # thm1 | cor1 | cor2 | thm_halfline | thm_halfline_odd
    items: tuple[CheckItem, ...]
    overall: str  # pass | fail | inconclusive

    def item(self, name: str) -> CheckItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)


def _q(**kw) -> tuple[tuple[str, float], ...]:
    return tuple((k, float(v)) for k, v in kw.items())


def _overall(items) -> str:
    verdicts = [it.verdict for it in items]
    if any(v == FAIL for v in verdicts):
        return FAIL
    if any(v == INCONCLUSIVE for v in verdicts):
        return INCONCLUSIVE
    return PASS


def _scan_domination(
    rhs: Rhs,
    t_vals: np.ndarray,
    k_vals: np.ndarray,
    x_lo: float,
    x_hi: float,
    slope_lo: float,
    slope_hi: float,
    nx: int,
    ny: int,
) -> tuple[float, int]:
    """Max of |f(t, x, y)| / psi(t) over the admissible lattice.

    y ranges over [slope_lo, slope_hi] / k(t) per time node; nodes with
    non-positive or non-finite k are skipped (singular weight points).
    Returns (worst ratio, number of time nodes actually sampled).
    """
    xs = np.linspace(x_lo, x_hi, nx)[:, None]
    worst = 0.0
    used = 0
    for t, kv in zip(np.asarray(t_vals, float), np.asarray(k_vals, float)):
        if not (math.isfinite(kv) and kv > 0.0):
            continue
        ys = np.linspace(slope_lo / kv, slope_hi / kv, ny)[None, :]
        fv = np.abs(np.asarray(rhs(float(t), xs, ys), dtype=float))
        fmax = float(np.max(fv))
        pv = float(rhs.psi_at(float(t)))
        used += 1
        if not math.isfinite(fmax) or pv < 0.0:
            worst = math.inf
            continue
        if pv == 0.0:
            if fmax > 0.0:
                worst = math.inf
            continue
        worst = max(worst, fmax / pv)
    return worst, used


def _margin_item(
    name: str, phi_s: float, two_l: float, image_lo: float, image_hi: float
) -> CheckItem:
    lo_margin = (phi_s - two_l) - image_lo
    hi_margin = image_hi - (phi_s + two_l)
    ok = lo_margin > 0.0 and hi_margin > 0.0
    return CheckItem(
        name,
        PASS if ok else FAIL,
        _q(
            phi_s_star=phi_s,
            two_l=two_l,
            margin_lo=lo_margin,
            margin_hi=hi_margin,
        ),
        detail="Phi(s*) +/- 2L must sit strictly inside the branch image",
    )


def _finite_interval_items(
    problem: BvpProblem,
    lattice: tuple[int, int, int],
    surjective_shortcut: bool,
) -> list[CheckItem]:
    nt, nx, ny = lattice
    branch = problem.branch
    items: list[CheckItem] = []

    invk = recip_weight_grid(problem)
    k1 = float(integrate(invk))
    kp = float(norm(invk, NormSpec(problem.p)))
    kappa_ok = math.isfinite(k1) and math.isfinite(kp) and k1 > 0.0
    items.append(
        CheckItem(
            "recip-norm",
            PASS if kappa_ok else FAIL,
            _q(k1=k1, kp=kp, p=problem.p),
            detail="1/k must have finite L1 and Lp norms on [0, T]",
        )
    )

    s_star = (problem.nu2 - problem.nu1) / k1 if kappa_ok else math.nan
    slope_ok = kappa_ok and branch.contains(s_star)
    items.append(
        CheckItem(
            "slope-in-branch",
            PASS if slope_ok else FAIL,
            _q(s_star=s_star, branch_lo=branch.lo, branch_hi=branch.hi),
        )
    )

    psi_grid = GridFunction.from_callable(problem.mesh, problem.rhs.psi_at, fill=0.0)
    L = float(integrate(psi_grid))
    psi_min = float(np.min(psi_grid.values[~problem.mesh.singular_mask()]))

    if surjective_shortcut:
        items.append(
            CheckItem(
                "image-margin",
                PASS,
                _q(two_l=2.0 * L),
                detail="surjective branch: the image margin holds for every L",
            )
        )
        margin_ok = slope_ok
    elif not slope_ok:
        items.append(
            CheckItem(
                "image-margin",
                INCONCLUSIVE,
                _q(two_l=2.0 * L),
                detail="s* lies outside the branch, margin undefined",
            )
        )
        margin_ok = False
    else:
        phi_s = float(problem.phi.fn(s_star))
        item = _margin_item(
            "image-margin", phi_s, 2.0 * L, branch.image_lo, branch.image_hi
        )
        items.append(item)
        margin_ok = item.verdict == PASS

    if psi_min < 0.0:
        items.append(
            CheckItem(
                "psi-domination",
                FAIL,
                _q(psi_min=psi_min),
                detail="psi is negative at sampled nodes",
            )
        )
        return items
    if not margin_ok:
        items.append(
            CheckItem(
                "psi-domination",
                INCONCLUSIVE,
                (),
                detail="admissible slope box undefined, nothing to sample",
            )
        )
        return items

    scalars = derive_scalars(problem, use_exact_length=False)
    box_lo = min(problem.nu1, scalars.N1, scalars.N2)
    box_hi = max(problem.nu1, scalars.N1, scalars.N2)
    t_vals = np.linspace(0.0, problem.T, nt)
    k_vals = np.asarray(problem.weight(t_vals), dtype=float)
    worst, used = _scan_domination(
        problem.rhs,
        t_vals,
        k_vals,
        box_lo,
        box_hi,
        scalars.slope_lo,
        scalars.slope_hi,
        nx,
        ny,
    )
    if used == 0:
        items.append(
            CheckItem(
                "psi-domination",
                INCONCLUSIVE,
                (),
                detail="no usable time nodes (weight vanished everywhere sampled)",
            )
        )
        return items
    ok = worst <= 1.0 + RATIO_SLACK
    items.append(
        CheckItem(
            "psi-domination",
            SAMPLED if ok else FAIL,
            _q(
                max_ratio=worst,
                t_nodes=used,
                x_nodes=nx,
                y_nodes=ny,
                box_lo=box_lo,
                box_hi=box_hi,
            ),
            detail="sampled |f(t,x,y)| <= psi(t) over the admissible box",
        )
    )
    return items


def check_theorem1(
    problem: BvpProblem, lattice: tuple[int, int, int] = DEFAULT_LATTICE
) -> HypothesisReport:
    """Full finite-interval hypothesis set for a generic branch.

    Checks, in order: finite 1/k norms, s* inside the branch, the strict
    image margin Phi(s*) +/- 2L, and the sampled psi-domination of f over
    the admissible (t, x, y) box.
    """
    items = _finite_interval_items(problem, lattice, surjective_shortcut=False)
    return HypothesisReport("thm1", tuple(items), _overall(items))


def check_corollary_surjective(
    problem: BvpProblem, lattice: tuple[int, int, int] = DEFAULT_LATTICE
) -> HypothesisReport:
    """Shortcut for branches whose image is all of R: the margin is free."""
    branch = problem.branch
    if math.isfinite(branch.image_lo) or math.isfinite(branch.image_hi):
        raise WrongCorollaryError(
            "branch image is bounded; use check_corollary_singular for a "
            "bounded domain with full image, or check_theorem1 otherwise"
        )
    items = _finite_interval_items(problem, lattice, surjective_shortcut=True)
    return HypothesisReport("cor1", tuple(items), _overall(items))


def check_corollary_singular(
    problem: BvpProblem, lattice: tuple[int, int, int] = DEFAULT_LATTICE
) -> HypothesisReport:
    """Bounded branch domain J with image all of R (singular operators).

    The domination box widens to the whole of J: x with (x - nu1)/k1 in J
    and slopes with k(t) y in J.
    """
    nt, nx, ny = lattice
    branch = problem.branch
    if not (math.isfinite(branch.lo) and math.isfinite(branch.hi)):
        raise WrongCorollaryError(
            "branch domain is unbounded; use check_corollary_surjective "
            "or check_theorem1"
        )
    if math.isfinite(branch.image_lo) or math.isfinite(branch.image_hi):
        raise WrongCorollaryError(
            "bounded-domain shortcut needs the branch image to be all of R"
        )
    items: list[CheckItem] = []

    invk = recip_weight_grid(problem)
    k1 = float(integrate(invk))
    kp = float(norm(invk, NormSpec(problem.p)))
    kappa_ok = math.isfinite(k1) and math.isfinite(kp) and k1 > 0.0
    items.append(
        CheckItem(
            "recip-norm",
            PASS if kappa_ok else FAIL,
            _q(k1=k1, kp=kp, p=problem.p),
        )
    )
    s_star = (problem.nu2 - problem.nu1) / k1 if kappa_ok else math.nan
    slope_ok = kappa_ok and branch.contains(s_star)
    items.append(
        CheckItem(
            "slope-in-branch",
            PASS if slope_ok else FAIL,
            _q(s_star=s_star, branch_lo=branch.lo, branch_hi=branch.hi),
        )
    )
    if not slope_ok:
        items.append(
            CheckItem(
                "psi-domination",
                INCONCLUSIVE,
                (),
                detail="s* outside the branch, nothing to sample",
            )
        )
        return HypothesisReport("cor2", tuple(items), _overall(items))

    # inset the open interval so endpoint singularities are never touched
    width = branch.hi - branch.lo
    j_lo = branch.lo + 1e-9 * width
    j_hi = branch.hi - 1e-9 * width
    t_vals = np.linspace(0.0, problem.T, nt)
    k_vals = np.asarray(problem.weight(t_vals), dtype=float)
    worst, used = _scan_domination(
        problem.rhs,
        t_vals,
        k_vals,
        problem.nu1 + k1 * j_lo,
        problem.nu1 + k1 * j_hi,
        j_lo,
        j_hi,
        nx,
        ny,
    )
    ok = used > 0 and worst <= 1.0 + RATIO_SLACK
    items.append(
        CheckItem(
            "psi-domination",
            SAMPLED if ok else FAIL,
            _q(max_ratio=worst, t_nodes=used, x_nodes=nx, y_nodes=ny),
            detail="sampled |f| <= psi over the whole branch box",
        )
    )
    return HypothesisReport("cor2", tuple(items), _overall(items))


def _golden_max(f: Callable, a: float, b: float, tol: float) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    z = 0.5 * (a + b)
    return z, f(z)


def plaplacian_maximizer(p: float, beta: float, N: float) -> tuple[float, float]:
    """Maximizer and maximum of ell(z) = (z/N)^{(p-1)/beta} - 2z for
    beta above the critical exponent p-1 (golden-section search bracketed
    by the closed-form critical point)."""
    pm1 = p - 1.0
    if not (beta > pm1):
        raise InvalidInputError("the maximizer exists only for beta > p-1")
    q = pm1 / beta

    def ell(z: float) -> float:
        return (z / N) ** q - 2.0 * z

    z_crit = (N ** ((1.0 - p) / beta) * pm1 / (2.0 * beta)) ** (beta / (beta - pm1))
    return _golden_max(ell, 0.0, 2.0 * z_crit, 1e-12 * max(z_crit, 1.0))


def plaplacian_bound(
    p: float, beta: float, N: float
) -> tuple[float, Callable[[float], float | None]]:
    """Admissible |lambda| bound for |x'|^{p-2} x' equations with
    |f(t,x,y)| <= N-bounded factor times |y|^beta.

    Write ell(z) = (z/N)^{(p-1)/beta} - 2z.  A constant psi = z_bar works
    whenever (|lambda|^{p-1} + 2 z_bar)^{beta/(p-1)} <= z_bar / N, i.e.
    |lambda|^{p-1} <= ell(z_bar); the best bound is (max ell)^{1/(p-1)}.
    Below the critical exponent (beta < p-1) ell is unbounded and every
    lambda is admissible.  Returns (bound, z_bar_solver) where the solver
    produces a usable z_bar for a given lambda, or None when none exists.
    """
    if not (p > 1.0 and math.isfinite(p)):
        raise InvalidInputError("p must exceed 1")
    if not (beta >= 0.0 and math.isfinite(beta)):
        raise InvalidInputError("beta must be nonnegative")
    if not (N > 0.0 and math.isfinite(N)):
        raise InvalidInputError("N must be positive")
    pm1 = p - 1.0
    if beta == 0.0:
        # rhs bounded outright: psi = N works for every lambda
        return math.inf, lambda lam: N
    if abs(beta - pm1) <= 1e-12 * max(1.0, pm1):
        raise DegenerateExponentError(
            "beta equal to p-1 is a borderline growth not covered; "
            "perturb beta to either side"
        )
    q = pm1 / beta

    def ell(z: float) -> float:
        return (z / N) ** q - 2.0 * z

    if beta < pm1:
        # q > 1: ell(z) -> +inf, a z_bar exists for every lambda
        def solver_below(lam: float) -> float | None:
            c = abs(lam) ** pm1
            z = max(N, 1.0)
            for _ in range(600):
                if ell(z) >= c:
                    return z
                z *= 2.0
            return None

        return math.inf, solver_below

    # q < 1: interior maximum at the closed-form critical point
    z_star, ell_max = plaplacian_maximizer(p, beta, N)
    bound = ell_max ** (1.0 / pm1) if ell_max > 0.0 else 0.0

    def solver_above(lam: float) -> float | None:
        c = abs(lam) ** pm1
        if c > ell_max * (1.0 + 1e-12):
            return None
        if c <= 0.0:
            return z_star
        lo, hi = 0.0, z_star
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ell(mid) >= c:
                hi = mid
            else:
                lo = mid
        return hi

    return bound, solver_above


def _mass_item(name: str, value: float, tail: float, detail: str) -> CheckItem:
    ok = math.isfinite(value) and tail <= 1e-3 * max(value, 1e-12)
    return CheckItem(name, PASS if ok else FAIL, _q(mass=value, tail_estimate=tail), detail)


def _halfline_t_lattice(nt: int) -> np.ndarray:
    head = np.linspace(0.0, 10.0, nt - nt // 2)
    tail = np.geomspace(10.0, 1.0e4, nt // 2 + 1)[1:]
    return np.concatenate([head, tail])


def check_halfline(
    hp: HalflineProblem,
    L_lip: float,
    delta: float,
    M: float | None = None,
    lattice: tuple[int, int, int] = DEFAULT_LATTICE,
) -> HypothesisReport:
    """Half-line hypothesis set built around the limit slope s*_inf.

    L_lip and delta describe the local Lipschitz bound of Phi near
    s*_inf (verified by sampling, it is an analytic input); M optionally
    pins lim psi(t) k(t) when tail probes cannot settle it.
    """
    if not (L_lip >= 0.0 and math.isfinite(L_lip)):
        raise InvalidInputError("L_lip must be nonnegative and finite")
    if not (delta > 0.0 and math.isfinite(delta)):
        raise InvalidInputError("delta must be positive")
    nt, nx, ny = lattice
    branch = hp.branch
    items: list[CheckItem] = []

    k_inf, k_tail = recip_mass(hp)
    items.append(
        _mass_item(
            "recip-integrable",
            k_inf,
            k_tail,
            "1/k must be integrable on the half-line",
        )
    )
    ell_inf, psi_tail = psi_mass(hp)
    items.append(
        _mass_item(
            "psi-integrable", ell_inf, psi_tail, "psi must be integrable on the half-line"
        )
    )
    k_ok = items[0].verdict == PASS

    s_inf = (hp.nu2 - hp.nu1) / k_inf if k_ok else math.nan
    slope_ok = k_ok and branch.contains(s_inf)
    items.append(
        CheckItem(
            "slope-in-branch",
            PASS if slope_ok else FAIL,
            _q(s_star_infinity=s_inf, branch_lo=branch.lo, branch_hi=branch.hi),
        )
    )

    # sampled Lipschitz verification near the limit slope
    if slope_ok:
        width = min(delta, s_inf - branch.lo, branch.hi - s_inf)
        ss = s_inf + np.linspace(-width, width, 401)
        ss = ss[np.abs(ss - s_inf) > 1e-14 * (1.0 + abs(s_inf))]
        phi_vals = np.asarray(hp.phi.fn(ss), dtype=float)
        phi_center = float(hp.phi.fn(s_inf))
        ratios = np.abs(phi_vals - phi_center) / np.abs(ss - s_inf)
        lip_worst = float(np.max(ratios))
        lip_ok = lip_worst <= L_lip * (1.0 + RATIO_SLACK) + 1e-15
        items.append(
            CheckItem(
                "lipschitz",
                SAMPLED if lip_ok else FAIL,
                _q(L_lip=L_lip, delta=delta, max_ratio=lip_worst),
                detail="sampled |Phi(s) - Phi(s*_inf)| <= L |s - s*_inf|",
            )
        )
    else:
        items.append(
            CheckItem(
                "lipschitz",
                INCONCLUSIVE,
                _q(L_lip=L_lip, delta=delta),
                detail="s*_inf outside the branch",
            )
        )

    # tail limit M = lim psi(t) k(t) against the threshold
    threshold = (
        L_lip * abs(hp.nu2 - hp.nu1) / (2.0 * k_inf**2) if k_ok else math.nan
    )
    if M is None:
        probes = np.asarray(TAIL_PROBES, dtype=float)
        vals = np.asarray(hp.rhs.psi_at(probes), dtype=float) * np.asarray(
            hp.weight(probes), dtype=float
        )
        if not np.all(np.isfinite(vals)):
            m_est, settled = math.nan, False
        else:
            spread = float(np.max(vals) - np.min(vals))
            scale = max(float(np.max(np.abs(vals))), 1e-12)
            settled = spread <= TAIL_SPREAD_TOL * scale
            m_est = float(np.mean(vals))
    else:
        m_est, settled = float(M), True
    if not settled:
        items.append(
            CheckItem(
                "tail-limit",
                INCONCLUSIVE,
                _q(threshold=threshold),
                detail="psi k probes have not settled; supply M analytically",
            )
        )
    else:
        m_ok = m_est > threshold or (m_est == 0.0 and threshold == 0.0)
        items.append(
            CheckItem(
                "tail-limit",
                PASS if m_ok else FAIL,
                _q(M=m_est, threshold=threshold),
                detail="needs lim psi(t) k(t) > L |nu2 - nu1| / (2 k_inf^2)",
            )
        )

    if not slope_ok:
        items.append(CheckItem("image-margin", INCONCLUSIVE, ()))
        items.append(CheckItem("psi-domination", INCONCLUSIVE, ()))
        return HypothesisReport("thm_halfline", tuple(items), _overall(items))

    phi_s = float(hp.phi.fn(s_inf))
    margin = _margin_item(
        "image-margin", phi_s, 2.0 * ell_inf, branch.image_lo, branch.image_hi
    )
    items.append(margin)
    if margin.verdict != PASS:
        items.append(
            CheckItem(
                "psi-domination",
                INCONCLUSIVE,
                (),
                detail="admissible slope box undefined, nothing to sample",
            )
        )
        return HypothesisReport("thm_halfline", tuple(items), _overall(items))

    a = partial_inverse(hp.phi, branch, phi_s - 2.0 * ell_inf)
    b = partial_inverse(hp.phi, branch, phi_s + 2.0 * ell_inf)
    slope_lo, slope_hi = (a, b) if a <= b else (b, a)
    x_lo = min(hp.nu1, hp.nu1 + k_inf * slope_lo)
    x_hi = max(hp.nu1, hp.nu1 + k_inf * slope_hi)
    t_vals = _halfline_t_lattice(nt)
    k_vals = np.asarray(hp.weight(t_vals), dtype=float)
    worst, used = _scan_domination(
        hp.rhs, t_vals, k_vals, x_lo, x_hi, slope_lo, slope_hi, nx, ny
    )
    ok = used > 0 and worst <= 1.0 + RATIO_SLACK
    items.append(
        CheckItem(
            "psi-domination",
            SAMPLED if ok else FAIL,
            _q(max_ratio=worst, t_nodes=used, x_nodes=nx, y_nodes=ny),
            detail="sampled |f| <= psi over the half-line admissible box",
        )
    )
    return HypothesisReport("thm_halfline", tuple(items), _overall(items))


def check_halfline_odd(
    hp: HalflineProblem, lattice: tuple[int, int, int] = DEFAULT_LATTICE
) -> HypothesisReport:
    """Odd-operator half-line shortcut: search a finite witness interval.

    Instead of the Lipschitz and tail-limit conditions, an odd operator
    only needs one T with s_T* inside the branch and Phi(s_T*) +/- 2
    ||psi|| inside the image; the witness grid doubles from 1 to 1024.
    """
    phi, branch = hp.phi, hp.branch
    if not phi.odd:
        raise InvalidInputError("odd-operator shortcut requires an odd operator")
    if not branch.increasing or abs(branch.lo + branch.hi) > 1e-12 * (
        1.0 + abs(branch.hi)
    ):
        raise InvalidInputError(
            "odd-operator shortcut requires the symmetric increasing branch"
        )
    nt, nx, ny = lattice
    items: list[CheckItem] = []

    k_inf, k_tail = recip_mass(hp)
    items.append(
        _mass_item(
            "recip-integrable",
            k_inf,
            k_tail,
            "1/k must be integrable on the half-line",
        )
    )
    ell_inf, psi_tail = psi_mass(hp)
    items.append(
        _mass_item(
            "psi-integrable", ell_inf, psi_tail, "psi must be integrable on the half-line"
        )
    )

    witness = None
    last_quantities: tuple[tuple[str, float], ...] = ()
    for T in T_WITNESS_GRID:
        k_T = k_mass_upto(hp.weight, T)
        s_T = (hp.nu2 - hp.nu1) / k_T
        if not branch.contains(s_T):
            last_quantities = _q(T=T, s_T_star=s_T)
            continue
        phi_sT = float(phi.fn(s_T))
        lo_margin = (phi_sT - 2.0 * ell_inf) - branch.image_lo
        hi_margin = branch.image_hi - (phi_sT + 2.0 * ell_inf)
        last_quantities = _q(
            T=T, s_T_star=s_T, margin_lo=lo_margin, margin_hi=hi_margin
        )
        if lo_margin > 0.0 and hi_margin > 0.0:
            witness = (T, k_T, s_T)
            break
    if witness is None:
        items.append(
            CheckItem(
                "witness-interval",
                FAIL,
                last_quantities,
                detail="no T in the doubling grid satisfies the margins",
            )
        )
        items.append(CheckItem("psi-domination", INCONCLUSIVE, ()))
        return HypothesisReport("thm_halfline_odd", tuple(items), _overall(items))

    T, k_T, s_T = witness
    items.append(
        CheckItem(
            "witness-interval",
            PASS,
            _q(T=T, k_T=k_T, s_T_star=s_T),
            detail="first doubling T with margins and slope inside the branch",
        )
    )

    # symmetric admissible box from the odd form of the slope estimates
    slope_hi = partial_inverse(phi, branch, float(phi.fn(abs(s_T))) + 2.0 * ell_inf)
    x_max = abs(hp.nu1) + k_inf * slope_hi
    t_vals = _halfline_t_lattice(nt)
    k_vals = np.asarray(hp.weight(t_vals), dtype=float)
    worst, used = _scan_domination(
        hp.rhs, t_vals, k_vals, -x_max, x_max, -slope_hi, slope_hi, nx, ny
    )
    ok = used > 0 and worst <= 1.0 + RATIO_SLACK
    items.append(
        CheckItem(
            "psi-domination",
            SAMPLED if ok else FAIL,
            _q(max_ratio=worst, slope_bound=slope_hi, x_bound=x_max),
            detail="sampled |f| <= psi over the symmetric admissible box",
        )
    )
    return HypothesisReport("thm_halfline_odd", tuple(items), _overall(items))


@dataclass(frozen=True)
class ExampleCondition:
    """Closed-form admissibility region of one worked problem family."""

    tag: str
    params: tuple[tuple[str, float], ...]
    bound: float
    bound_kind: str  # "finite" | "all-of-branch"
    lam: float
    admissible: bool
    detail: str = ""


def _condition(tag, params, bound, lam, admissible, detail) -> ExampleCondition:
    return ExampleCondition(
        tag=tag,
        params=_q(**params),
        bound=float(bound),
        bound_kind="all-of-branch" if math.isinf(bound) else "finite",
        lam=float(lam),
        admissible=bool(admissible),
        detail=detail,
    )


def _take(tag: str, params: dict, name: str) -> float:
    if name not in params:
        raise InvalidInputError(f"{tag} needs parameter {name!r}")
    return float(params.pop(name))


def example_condition(tag: str, lam: float, **params) -> ExampleCondition:
    """Evaluate one worked example's closed-form lambda condition.

    Tags: perona (alpha, M, N), sine (alpha, M, N), plaplacian (p, beta,
    N), relativistic (k1), halfline1 (r), halfline2 (j_half_width,
    k_infinity).  Boundary data is x(0) = 0, x(end) = lambda throughout.
    """
    if tag == "perona":
        alpha = _take(tag, params, "alpha")
        M = float(params.pop("M", 1.0))
        N = float(params.pop("N", 1.0))
        _reject_extra(tag, params)
        if alpha <= -1.0:
            raise InvalidInputError("alpha must exceed -1 for an integrable psi")
        c = 0.5 - 2.0 * M * N / (alpha + 1.0)
        # s/(1+s^2) = c has its first positive root at (1-sqrt(1-4c^2))/(2c)
        bound = (1.0 - math.sqrt(1.0 - 4.0 * c * c)) / (2.0 * c) if c > 0.0 else 0.0
        return _condition(
            "perona",
            dict(alpha=alpha, M=M, N=N, threshold=c),
            bound,
            lam,
            abs(lam) < bound,
            "needs |lambda|/(1+lambda^2) < 1/2 - 2MN/(alpha+1)",
        )
    if tag == "sine":
        alpha = _take(tag, params, "alpha")
        M = float(params.pop("M", 1.0))
        N = float(params.pop("N", 1.0))
        _reject_extra(tag, params)
        if alpha <= -1.0:
            raise InvalidInputError("alpha must exceed -1 for an integrable psi")
        c = 1.0 - 2.0 * M * N / (alpha + 1.0)
        bound = math.asin(c) if c > 0.0 else 0.0
        return _condition(
            "sine",
            dict(alpha=alpha, M=M, N=N, threshold=c),
            bound,
            lam,
            abs(lam) < bound,
            "needs sin(|lambda|) < 1 - 2MN/(alpha+1) on the principal branch",
        )
    if tag == "plaplacian":
        p = float(params.pop("p", 2.0))
        beta = _take(tag, params, "beta")
        N = float(params.pop("N", 1.0))
        _reject_extra(tag, params)
        bound, _ = plaplacian_bound(p, beta, N)
        return _condition(
            "plaplacian",
            dict(p=p, beta=beta, N=N),
            bound,
            lam,
            abs(lam) <= bound,
            "needs |lambda|^{p-1} <= max of (z/N)^{(p-1)/beta} - 2z",
        )
    if tag == "relativistic":
        k1 = float(params.pop("k1", 1.0))
        _reject_extra(tag, params)
        return _condition(
            "relativistic",
            dict(k1=k1),
            k1,
            lam,
            abs(lam) < k1,
            "needs s* = lambda/k1 inside (-1, 1); every such lambda works",
        )
    if tag == "halfline1":
        r = float(params.pop("r", (math.pi + 4.0) ** -1.5))
        _reject_extra(tag, params)
        bound = r * math.pi**2 / 2.0
        return _condition(
            "halfline1",
            dict(r=r),
            bound,
            lam,
            abs(lam) < bound,
            "needs |lambda| < r pi^2 / 2 for the tail-limit margin",
        )
    if tag == "halfline2":
        w = float(params.pop("j_half_width", math.inf))
        k_inf = float(params.pop("k_infinity", math.pi / 2.0))
        _reject_extra(tag, params)
        bound = k_inf * w
        return _condition(
            "halfline2",
            dict(j_half_width=w, k_infinity=k_inf),
            bound,
            lam,
            abs(lam) < bound,
            "needs the limit slope s*_inf = lambda/k_inf inside the branch",
        )
    raise InvalidInputError(
        "unknown example tag; use perona, sine, plaplacian, relativistic, "
        "halfline1 or halfline2"
    )


def _reject_extra(tag: str, params: dict) -> None:
    if params:
        extra = ", ".join(sorted(params))
        raise InvalidInputError(f"unknown parameters for {tag}: {extra}")

"""Problem data for (Phi(k(t) x'))' = f(t, x, x') on [0, T] with Dirichlet data.

Bundles the operator branch, the weight k, the right-hand side f with its
dominating integrable bound psi, and the boundary values, and derives the
scalar quantities the existence argument is built from: the weighted
length k1, the reference slope s*, the psi mass L, the shifted slopes
A*, B*, and the solution box [N1, N2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import BranchError, CompatibilityError, EnvelopeError, InvalidInputError
from .grid import SENTINEL, GridFunction, Mesh, integrate, norm
from .operators import MonotoneBranch, PhiOperator, find_branch, partial_inverse


@dataclass(frozen=True, eq=False)
class Weight:
    """Coefficient k(t) > 0 a.e., possibly vanishing at listed singular points.

    recip_antiderivative, when given, is the exact K(t) = integral of 1/k
    over [0, t]; recip_total is its limit at infinity (for half-line work).
    """

    fn: Callable = field(repr=False)
    singular_points: tuple[float, ...] = ()
    recip_antiderivative: Callable | None = field(default=None, repr=False)
    recip_total: float | None = None
    name: str = "custom"
    params: tuple[tuple[str, float], ...] = ()

    def __call__(self, t):
        with np.errstate(all="ignore"):
            return self.fn(np.asarray(t, dtype=float))

    def recip(self, t):
        with np.errstate(all="ignore"):
            return 1.0 / np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)


def constant_weight(value: float = 1.0) -> Weight:
    if not (value > 0 and math.isfinite(value)):
        raise InvalidInputError("constant weight must be positive and finite")
    return Weight(
        fn=lambda t: np.full_like(np.asarray(t, dtype=float), value),
        recip_antiderivative=lambda t: np.asarray(t, dtype=float) / value,
        recip_total=math.inf,
        name="constant",
        params=(("value", float(value)),),
    )


def one_plus_t_squared_weight() -> Weight:
    return Weight(
        fn=lambda t: 1.0 + np.asarray(t, dtype=float) ** 2,
        recip_antiderivative=np.arctan,
        recip_total=math.pi / 2.0,
        name="one_plus_t_squared",
    )


def sqrt_t_weight() -> Weight:
    return Weight(
        fn=lambda t: np.sqrt(np.asarray(t, dtype=float)),
        singular_points=(0.0,),
        recip_antiderivative=lambda t: 2.0 * np.sqrt(np.asarray(t, dtype=float)),
        recip_total=math.inf,
        name="sqrt_t",
    )


WEIGHT_CATALOG: dict[str, Callable[..., Weight]] = {
    "constant": constant_weight,
    "one_plus_t_squared": one_plus_t_squared_weight,
    "sqrt_t": sqrt_t_weight,
}


def make_weight(name: str, **params) -> Weight:
    if name not in WEIGHT_CATALOG:
        known = ", ".join(sorted(WEIGHT_CATALOG))
        raise InvalidInputError(f"unknown weight {name!r}; catalog: {known}")
    return WEIGHT_CATALOG[name](**params)


@dataclass(frozen=True, eq=False)
class Rhs:
    """Right-hand side f(t, x, y) dominated by an integrable psi(t) >= 0."""

    fn: Callable = field(repr=False)
    psi: Callable = field(repr=False)
    name: str = "custom"

    def __call__(self, t, x, y):
        with np.errstate(all="ignore"):
            return self.fn(
                np.asarray(t, dtype=float),
                np.asarray(x, dtype=float),
                np.asarray(y, dtype=float),
            )

    def psi_at(self, t):
        with np.errstate(all="ignore"):
            return np.asarray(self.psi(np.asarray(t, dtype=float)), dtype=float)


def zero_rhs() -> Rhs:
    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return Rhs(fn=lambda t, x, y: np.zeros_like(t + x + y), psi=zero, name="zero")


def constant_rhs(value: float) -> Rhs:
    mag = abs(float(value))
    return Rhs(
        fn=lambda t, x, y: np.full_like(t + x + y, float(value)),
        psi=lambda t: np.full_like(np.asarray(t, dtype=float), mag),
        name="constant",
    )


RHS_CATALOG: dict[str, Callable[..., Rhs]] = {
    "zero": zero_rhs,
    "constant": constant_rhs,
}


def make_rhs(name: str, **params) -> Rhs:
    if name not in RHS_CATALOG:
        known = ", ".join(sorted(RHS_CATALOG))
        raise InvalidInputError(f"unknown rhs {name!r}; catalog: {known}")
    return RHS_CATALOG[name](**params)


@dataclass(frozen=True, eq=False)
class BvpProblem:
    phi: PhiOperator
    branch: MonotoneBranch
    weight: Weight
    rhs: Rhs
    nu1: float
    nu2: float
    T: float
    p: float = 1.0
    mesh: Mesh = None

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InvalidInputError("T must be positive and finite")
        if not (self.p >= 1.0):
            raise InvalidInputError("p must satisfy p >= 1")
        for v in (self.nu1, self.nu2):
            if not math.isfinite(v):
                raise InvalidInputError("boundary values must be finite")
        if self.mesh is None:
            raise InvalidInputError("problem needs a mesh; use make_problem")
        if abs(self.mesh.T - self.T) > 1e-12 * max(1.0, self.T):
            raise InvalidInputError("mesh endpoint differs from T")


def default_mesh(
    weight: Weight,
    T: float,
    n: int = 1000,
    ratio: float = 0.7,
    graded_cells: int = 32,
) -> Mesh:
    points = [p for p in weight.singular_points if 0.0 <= p <= T]
    if points:
        return Mesh.graded(T, n, points, ratio=ratio, graded_cells=graded_cells)
    return Mesh.uniform(T, n)


def make_problem(
    phi: PhiOperator,
    weight: Weight,
    rhs: Rhs,
    nu1: float,
    nu2: float,
    T: float,
    branch: MonotoneBranch | None = None,
    branch_hint: tuple[float, float] | None = None,
    p: float = 1.0,
    mesh: Mesh | None = None,
    mesh_n: int = 1000,
    ratio: float = 0.7,
    graded_cells: int = 32,
) -> BvpProblem:
    """Assemble a problem, selecting the branch around s* when not given."""
    if mesh is None:
        mesh = default_mesh(weight, T, n=mesh_n, ratio=ratio, graded_cells=graded_cells)
    if branch is None:
        k1 = _k1_for(weight, mesh)
        s_star = (nu2 - nu1) / k1
        branch = find_branch(phi, s_star, hint=branch_hint)
    return BvpProblem(phi, branch, weight, rhs, nu1, nu2, T, p=p, mesh=mesh)


def recip_weight_grid(problem: BvpProblem) -> GridFunction:
    """1/k as a grid function; singular nodes hold a placeholder zero."""
    g = GridFunction.from_callable(problem.mesh, problem.weight.recip, fill=0.0)
    mask = ~problem.mesh.singular_mask()
    vals = g.values[mask]
    if np.any(vals <= 0.0):
        raise InvalidInputError("weight must be positive away from singular points")
    return g


def _k1_for(weight: Weight, mesh: Mesh) -> float:
    g = GridFunction.from_callable(mesh, weight.recip, fill=0.0)
    return integrate(g)


@dataclass(frozen=True)
class DerivedScalars:
    """Scalar data the existence hypotheses and the solver share."""

    k1: float
    k1_quad: float
    kp: float
    s_star: float
    L: float
    phi_s_star: float
    A_star: float
    B_star: float
    slope_lo: float
    slope_hi: float
    N1: float
    N2: float


def derive_scalars(
    problem: BvpProblem, use_exact_length: bool = True
) -> DerivedScalars:
    """Compute k1, kp, s*, L, the shifted slopes A*, B*, and the box [N1, N2].

    Raises BranchError when s* leaves the branch and CompatibilityError
    when Phi(s*) +- 2L leaves the branch image.  use_exact_length=False
    forces the quadrature value of k1 even when the weight carries an
    exact antiderivative; the solver needs that so its envelopes agree
    with its own quadrature to rounding accuracy.
    """
    mesh = problem.mesh
    invk = recip_weight_grid(problem)
    k1_quad = integrate(invk)
    k1 = k1_quad
    K = problem.weight.recip_antiderivative
    if K is not None:
        k1_exact = float(K(problem.T)) - float(K(0.0))
        tol = 1e-6 if not problem.weight.singular_points else 1e-2
        if abs(k1_quad - k1_exact) > tol * max(1.0, abs(k1_exact)):
            raise InvalidInputError(
                "weight antiderivative self-test failed: "
                f"quadrature {k1_quad!r} vs exact {k1_exact!r}"
            )
        if use_exact_length:
            k1 = k1_exact
    kp = norm(invk, problem.p)

    s_star = (problem.nu2 - problem.nu1) / k1
    if not problem.branch.contains(s_star):
        raise BranchError(
            f"reference slope {s_star!r} outside branch "
            f"({problem.branch.lo}, {problem.branch.hi})"
        )

    psi = GridFunction.from_callable(mesh, problem.rhs.psi_at, fill=0.0)
    if np.any(psi.values < 0.0):
        raise InvalidInputError("psi must be nonnegative")
    L = integrate(psi)

    phi_s = float(problem.phi(s_star))
    b1, b2 = problem.branch.image_lo, problem.branch.image_hi
    if not (b1 < phi_s - 2.0 * L and phi_s + 2.0 * L < b2):
        raise CompatibilityError(
            f"Phi(s*) +- 2L = {phi_s!r} +- {2.0 * L!r} leaves the branch image "
            f"({b1!r}, {b2!r})"
        )
    A_star = partial_inverse(problem.phi, problem.branch, phi_s - 2.0 * L)
    B_star = partial_inverse(problem.phi, problem.branch, phi_s + 2.0 * L)
    slope_lo, slope_hi = sorted((A_star, B_star))
    N1 = problem.nu1 + k1 * slope_lo
    N2 = problem.nu1 + k1 * slope_hi
    return DerivedScalars(
        k1=k1,
        k1_quad=k1_quad,
        kp=kp,
        s_star=s_star,
        L=L,
        phi_s_star=phi_s,
        A_star=A_star,
        B_star=B_star,
        slope_lo=slope_lo,
        slope_hi=slope_hi,
        N1=N1,
        N2=N2,
    )


@dataclass(frozen=True, eq=False)
class Envelopes:
    """Nodal derivative bounds eta1 <= x' <= eta2 and the solution box."""

    eta1: GridFunction
    eta2: GridFunction
    N1: float
    N2: float


def envelopes(problem: BvpProblem, scalars: DerivedScalars) -> Envelopes:
    """Derivative envelopes slope/k(t); singular nodes get wide sentinels."""
    mesh = problem.mesh
    with np.errstate(all="ignore"):
        invk = np.asarray(problem.weight.recip(mesh.nodes), dtype=float)
    mask = mesh.singular_mask()
    lo = np.where(mask, -SENTINEL, scalars.slope_lo * invk)
    hi = np.where(mask, SENTINEL, scalars.slope_hi * invk)
    if np.any(lo[~mask] > hi[~mask]):
        raise EnvelopeError("derivative envelopes are inverted")
    return Envelopes(
        eta1=GridFunction(mesh, lo),
        eta2=GridFunction(mesh, hi),
        N1=scalars.N1,
        N2=scalars.N2,
    )


def truncate(values, lo, hi):
    """Componentwise clamp of values into [lo, hi]."""
    lo_arr = np.asarray(lo, dtype=float)
    hi_arr = np.asarray(hi, dtype=float)
    if np.any(lo_arr > hi_arr):
        raise EnvelopeError("truncation bounds are inverted")
    return np.clip(np.asarray(values, dtype=float), lo_arr, hi_arr)


def oriented_problem(problem: BvpProblem) -> tuple[BvpProblem, bool]:
    """Reduce a decreasing branch to the increasing case via Phi -> -Phi, f -> -f.

    Solutions are unchanged; the composed quantity u = Phi(k x') changes
    sign, as does the integration constant.
    """
    if problem.branch.increasing:
        return problem, False
    phi = problem.phi
    br = problem.branch
    neg_phi = PhiOperator(
        name=f"neg_{phi.name}",
        fn=lambda s: -np.asarray(phi.fn(s), dtype=float),
        domain=phi.domain,
        odd=phi.odd,
        params=phi.params,
    )
    inv = br.inverse
    neg_branch = MonotoneBranch(
        br.lo,
        br.hi,
        True,
        -br.image_hi,
        -br.image_lo,
        inverse=(None if inv is None else (lambda y: inv(-np.asarray(y, dtype=float)))),
    )
    rhs = problem.rhs
    neg_rhs = Rhs(
        fn=lambda t, x, y: -np.asarray(rhs.fn(t, x, y), dtype=float),
        psi=rhs.psi,
        name=rhs.name,
    )
    flipped = replace(problem, phi=neg_phi, branch=neg_branch, rhs=neg_rhs)
    return flipped, True

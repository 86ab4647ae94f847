"""Scalar operators Phi and their strictly monotone branches.

A branch is an interval on which Phi is strictly monotone together with
its image interval; inversion is only ever performed branch-wise.  The
catalog operators carry their monotone pieces analytically (exact piece
endpoints, exact images, and a stable closed-form inverse where one
exists); anything else falls back to dense sampling and bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BranchError,
    BranchNotFoundError,
    DomainError,
    ImageDomainError,
    InvalidInputError,
)

# No branch search or bisection ever leaves |s| <= WORK_WINDOW.
WORK_WINDOW = 1.0e8

BISECT_TOL = 1e-13
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class MonotonePiece:
    """Maximal interval of strict monotonicity known analytically."""

    lo: float
    hi: float
    increasing: bool
    image_lo: float
    image_hi: float
    inverse: Callable | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MonotoneBranch:
    """Certified strictly monotone interval with its oriented image."""

    lo: float
    hi: float
    increasing: bool
    image_lo: float
    image_hi: float
    inverse: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidInputError("branch endpoints must satisfy lo < hi")
        if not self.image_lo < self.image_hi:
            raise InvalidInputError("branch image must be a nonempty open interval")

    def contains(self, s: float) -> bool:
        return self.lo < s < self.hi


@dataclass(frozen=True, eq=False)
class PhiOperator:
    """Operator s -> Phi(s) on an open domain, with optional piece metadata."""

    name: str
    fn: Callable = field(repr=False)
    domain: tuple[float, float] = (-math.inf, math.inf)
    odd: bool = False
    piece_at: Callable[[float], MonotonePiece | None] | None = field(
        default=None, repr=False
    )
    params: tuple[tuple[str, float], ...] = ()

    def __call__(self, s):
        with np.errstate(all="ignore"):
            return self.fn(np.asarray(s, dtype=float))


# -- catalog -----------------------------------------------------------------


def _selftest_inverse(fn: Callable, piece: MonotonePiece, name: str) -> None:
    a = max(piece.lo, -1e6)
    b = min(piece.hi, 1e6)
    ss = a + (b - a) * np.linspace(0.02, 0.98, 17)
    with np.errstate(all="ignore"):
        y = fn(ss)
        back = piece.inverse(y)
        resid = np.abs(fn(back) - y)
    if not np.all(resid <= 1e-12 * np.maximum(1.0, np.abs(y))):
        raise InvalidInputError(f"analytic inverse self-test failed for {name}")


def _static_pieces(pieces: tuple[MonotonePiece, ...]) -> Callable:
    def piece_at(s: float) -> MonotonePiece | None:
        for p in pieces:
            if p.lo <= s <= p.hi:
                return p
        return None

    return piece_at


def r_laplacian(r: float = 2.0) -> PhiOperator:
    """Phi(s) = |s|^(r-2) s on the whole line, strictly increasing."""
    if not r > 1.0:
        raise InvalidInputError("r_laplacian needs r > 1")
    e = r - 1.0

    def fn(s):
        return np.sign(s) * np.abs(s) ** e

    def inv(y):
        return np.sign(y) * np.abs(y) ** (1.0 / e)

    piece = MonotonePiece(-math.inf, math.inf, True, -math.inf, math.inf, inv)
    _selftest_inverse(fn, piece, "r_laplacian")
    return PhiOperator(
        "r_laplacian",
        fn,
        odd=True,
        piece_at=_static_pieces((piece,)),
        params=(("r", float(r)),),
    )


def mean_curvature() -> PhiOperator:
    """Phi(s) = s / sqrt(1 + s^2): increasing, image (-1, 1)."""

    def fn(s):
        return s / np.sqrt(1.0 + s * s)

    def inv(y):
        return y / np.sqrt(1.0 - y * y)

    piece = MonotonePiece(-math.inf, math.inf, True, -1.0, 1.0, inv)
    _selftest_inverse(fn, piece, "mean_curvature")
    return PhiOperator("mean_curvature", fn, odd=True, piece_at=_static_pieces((piece,)))


def relativistic() -> PhiOperator:
    """Phi(s) = s / sqrt(1 - s^2) on (-1, 1): increasing onto the whole line."""

    def fn(s):
        return s / np.sqrt(1.0 - s * s)

    def inv(y):
        return y / np.sqrt(1.0 + y * y)

    piece = MonotonePiece(-1.0, 1.0, True, -math.inf, math.inf, inv)
    _selftest_inverse(fn, piece, "relativistic")
    return PhiOperator(
        "relativistic", fn, domain=(-1.0, 1.0), odd=True, piece_at=_static_pieces((piece,))
    )


def p_relativistic(p: float = 2.0) -> PhiOperator:
    """Phi(s) = |s|^(p-2) s / (1 - |s|^p)^((p-1)/p) on (-1, 1), onto the line."""
    if not p > 1.0:
        raise InvalidInputError("p_relativistic needs p > 1")

    def fn(s):
        a = np.abs(s)
        return np.sign(s) * a ** (p - 1.0) / (1.0 - a**p) ** ((p - 1.0) / p)

    def inv(y):
        # w = |s|^p = 1 / (1 + |y|^(-p/(p-1))), stable for tiny and huge y
        a = np.abs(np.asarray(y, dtype=float))
        with np.errstate(divide="ignore"):
            w = 1.0 / (1.0 + a ** (-p / (p - 1.0)))
        return np.sign(y) * w ** (1.0 / p)

    piece = MonotonePiece(-1.0, 1.0, True, -math.inf, math.inf, inv)
    _selftest_inverse(fn, piece, "p_relativistic")
    return PhiOperator(
        "p_relativistic",
        fn,
        domain=(-1.0, 1.0),
        odd=True,
        piece_at=_static_pieces((piece,)),
        params=(("p", float(p)),),
    )


def perona_malik() -> PhiOperator:
    """Phi(s) = s / (1 + s^2): increasing only on (-1, 1), peak value 1/2."""

    def fn(s):
        return s / (1.0 + s * s)

    def inv_mid(y):
        # 2y / (1 + sqrt(1 - 4y^2)) avoids cancellation at y = 0
        return 2.0 * y / (1.0 + np.sqrt(1.0 - 4.0 * y * y))

    def inv_outer(y):
        return (1.0 + np.sqrt(1.0 - 4.0 * y * y)) / (2.0 * y)

    mid = MonotonePiece(-1.0, 1.0, True, -0.5, 0.5, inv_mid)
    right = MonotonePiece(1.0, math.inf, False, 0.0, 0.5, inv_outer)
    left = MonotonePiece(-math.inf, -1.0, False, -0.5, 0.0, inv_outer)
    _selftest_inverse(fn, mid, "perona_malik")

    def piece_at(s: float) -> MonotonePiece | None:
        if -1.0 <= s <= 1.0:
            return mid
        return right if s > 1.0 else left

    return PhiOperator("perona_malik", fn, odd=True, piece_at=piece_at)


def sine() -> PhiOperator:
    """Phi(s) = sin s: monotone on each ((m-1/2)pi, (m+1/2)pi)."""

    def piece_at(s: float) -> MonotonePiece | None:
        m = math.floor(s / math.pi + 0.5)
        lo = (m - 0.5) * math.pi
        hi = (m + 0.5) * math.pi
        increasing = m % 2 == 0
        sign = 1.0 if increasing else -1.0
        shift = m * math.pi

        def inv(y, shift=shift, sign=sign):
            return shift + sign * np.arcsin(y)

        piece = MonotonePiece(lo, hi, increasing, -1.0, 1.0, inv)
        return piece

    op = PhiOperator("sine", np.sin, odd=True, piece_at=piece_at)
    _selftest_inverse(np.sin, piece_at(0.0), "sine")
    _selftest_inverse(np.sin, piece_at(math.pi), "sine (shifted piece)")
    return op


def difference(alpha: float, beta: float) -> PhiOperator:
    """Phi(s) = |s|^alpha s - |s|^beta s with alpha != beta: non-monotone."""
    if alpha < 0 or beta < 0:
        raise InvalidInputError("difference exponents must be nonnegative")
    if alpha == beta:
        raise InvalidInputError("difference needs alpha != beta")

    def fn(s):
        a = np.abs(s)
        return np.sign(s) * (a ** (alpha + 1.0) - a ** (beta + 1.0))

    # critical |s| where (alpha+1)|s|^alpha = (beta+1)|s|^beta
    s_c = ((beta + 1.0) / (alpha + 1.0)) ** (1.0 / (alpha - beta))
    f_c = float(fn(np.asarray(s_c)))
    outer_increasing = alpha > beta  # outer pieces follow the larger exponent
    if outer_increasing:
        mid = MonotonePiece(-s_c, s_c, False, f_c, -f_c)
        right = MonotonePiece(s_c, math.inf, True, f_c, math.inf)
        left = MonotonePiece(-math.inf, -s_c, True, -math.inf, -f_c)
    else:
        mid = MonotonePiece(-s_c, s_c, True, -f_c, f_c)
        right = MonotonePiece(s_c, math.inf, False, -math.inf, f_c)
        left = MonotonePiece(-math.inf, -s_c, False, -f_c, math.inf)

    def piece_at(s: float) -> MonotonePiece | None:
        if -s_c <= s <= s_c:
            return mid
        return right if s > s_c else left

    return PhiOperator(
        "difference",
        fn,
        odd=True,
        piece_at=piece_at,
        params=(("alpha", float(alpha)), ("beta", float(beta))),
    )


OPERATOR_CATALOG: dict[str, Callable[..., PhiOperator]] = {
    "r_laplacian": r_laplacian,
    "mean_curvature": mean_curvature,
    "relativistic": relativistic,
    "p_relativistic": p_relativistic,
    "perona_malik": perona_malik,
    "sine": sine,
    "difference": difference,
}


def make_operator(name: str, **params) -> PhiOperator:
    if name not in OPERATOR_CATALOG:
        known = ", ".join(sorted(OPERATOR_CATALOG))
        raise InvalidInputError(f"unknown operator {name!r}; catalog: {known}")
    return OPERATOR_CATALOG[name](**params)


# -- branch selection ---------------------------------------------------------


def _limit_at(phi: PhiOperator, s: float, toward: float) -> float:
    """Limit of Phi approaching s from the side of `toward`."""
    if math.isfinite(s):
        v = float(phi(s))
        if math.isfinite(v):
            return v
        seq = [s + math.copysign(d, toward - s) for d in (1e-6, 1e-9, 1e-12)]
    else:
        sign = 1.0 if s > 0 else -1.0
        seq = [sign * 1e4, sign * 1e6, sign * WORK_WINDOW]
    vals = [float(phi(t)) for t in seq]
    vals = [v for v in vals if math.isfinite(v)]
    if not vals:
        raise BranchNotFoundError(f"cannot estimate image endpoint near s={s!r}")
    if abs(vals[-1]) > 1e12 and abs(vals[-1]) > 2.0 * abs(vals[0]):
        return math.copysign(math.inf, vals[-1])
    return vals[-1]


def _sample_window(phi: PhiOperator, a: float, b: float, samples: int):
    pad = (b - a) * 1e-9
    ss = np.linspace(a + pad, b - pad, samples)
    with np.errstate(all="ignore"):
        vv = np.asarray(phi.fn(ss), dtype=float)
    return ss, vv


def _monotone_direction(vv: np.ndarray) -> int | None:
    """+1 strictly increasing, -1 strictly decreasing, None otherwise."""
    d = np.diff(vv)
    if not np.all(np.isfinite(vv)):
        return None
    if np.all(d > 0):
        return 1
    if np.all(d < 0):
        return -1
    return None


def find_branch(
    phi: PhiOperator,
    s_star: float,
    hint: tuple[float, float] | None = None,
    samples: int = 2048,
) -> MonotoneBranch:
    """Certify a strictly monotone branch of Phi containing s_star.

    With a hint interval, monotonicity is validated by dense sampling on
    the hint; without one, a window grows symmetrically around s_star
    until sampling detects a violation, then shrinks to the largest
    violation-free sampled run.  Catalog piece metadata supplies exact
    images and inverses whenever the branch sits inside a known piece.
    """
    dom_lo, dom_hi = phi.domain
    if not dom_lo < s_star < dom_hi:
        raise DomainError(f"slope {s_star!r} outside operator domain ({dom_lo}, {dom_hi})")

    if hint is not None:
        a, b = float(hint[0]), float(hint[1])
        if not a < b:
            raise InvalidInputError("branch hint must be a nonempty interval")
        if a < dom_lo or b > dom_hi:
            raise DomainError("branch hint leaves the operator domain")
        if not a < s_star < b:
            raise BranchError(f"slope {s_star!r} not inside branch hint ({a}, {b})")
        ss, vv = _sample_window(phi, max(a, -WORK_WINDOW), min(b, WORK_WINDOW), samples)
        direction = _monotone_direction(vv)
        if direction is None:
            raise BranchNotFoundError(
                f"sampled monotonicity violation inside hint ({a}, {b})"
            )
        piece = phi.piece_at(0.5 * (max(a, -WORK_WINDOW) + min(b, WORK_WINDOW))) if phi.piece_at else None
        if piece is not None and a >= piece.lo - 1e-12 and b <= piece.hi + 1e-12:
            inc = piece.increasing
            img_a = piece.image_lo if inc else piece.image_hi
            img_b = piece.image_hi if inc else piece.image_lo
            if a > piece.lo + 1e-12:
                img_a = _limit_at(phi, a, b)
            if b < piece.hi - 1e-12:
                img_b = _limit_at(phi, b, a)
            lo_img, hi_img = sorted((img_a, img_b))
            return MonotoneBranch(a, b, inc, lo_img, hi_img, piece.inverse)
        img_a = _limit_at(phi, a, b)
        img_b = _limit_at(phi, b, a)
        lo_img, hi_img = sorted((img_a, img_b))
        return MonotoneBranch(a, b, direction > 0, lo_img, hi_img, None)

    if phi.piece_at is not None:
        piece = phi.piece_at(s_star)
        if piece is not None and piece.lo < s_star < piece.hi:
            return MonotoneBranch(
                piece.lo, piece.hi, piece.increasing,
                piece.image_lo, piece.image_hi, piece.inverse,
            )
        raise BranchNotFoundError(
            f"no strictly monotone piece has {s_star!r} in its interior"
        )

    # sampling expansion
    radius = max(1e-3, 1e-3 * abs(s_star))
    while True:
        a = max(dom_lo, s_star - radius, -WORK_WINDOW)
        b = min(dom_hi, s_star + radius, WORK_WINDOW)
        ss, vv = _sample_window(phi, a, b, samples)
        direction = _monotone_direction(vv)
        hit_edge = a <= max(dom_lo, -WORK_WINDOW) + 0.0 and b >= min(dom_hi, WORK_WINDOW)
        if direction is not None and not hit_edge:
            radius *= 2.0
            continue
        if direction is not None:
            return MonotoneBranch(
                float(ss[0]), float(ss[-1]), direction > 0,
                float(min(vv[0], vv[-1])), float(max(vv[0], vv[-1])), None,
            )
        # shrink to the largest monotone sampled run containing s_star
        idx = int(np.searchsorted(ss, s_star))
        idx = min(max(idx, 1), ss.size - 2)
        d = np.diff(vv)
        sign = np.sign(d[idx - 1]) or np.sign(d[idx])
        if sign == 0 or not np.isfinite(sign):
            raise BranchNotFoundError(f"Phi is locally flat at s={s_star!r}")
        i_lo = idx - 1
        while i_lo > 0 and np.sign(d[i_lo - 1]) == sign:
            i_lo -= 1
        i_hi = idx
        while i_hi < d.size - 1 and np.sign(d[i_hi + 1]) == sign:
            i_hi += 1
        lo, hi = float(ss[i_lo]), float(ss[i_hi + 1])
        if not lo < s_star < hi:
            raise BranchNotFoundError(
                f"no strictly monotone sampled run contains s={s_star!r}"
            )
        v_lo, v_hi = float(vv[i_lo]), float(vv[i_hi + 1])
        return MonotoneBranch(
            lo, hi, sign > 0, min(v_lo, v_hi), max(v_lo, v_hi), None
        )


def image_of_branch(phi: PhiOperator, branch: MonotoneBranch) -> tuple[float, float]:
    """Oriented image interval (b1, b2) of the branch, b1 < b2."""
    return (branch.image_lo, branch.image_hi)


# -- branch-wise inversion ----------------------------------------------------


def _oriented(phi: PhiOperator, branch: MonotoneBranch):
    if branch.increasing:
        return (lambda s: phi(s)), 1.0
    return (lambda s: -phi(s)), -1.0


def _bracket_endpoint(f, lo, hi, target, side: str):
    """Move inward from an open endpoint until f is finite and brackets target."""
    base, other = (lo, hi) if side == "lo" else (hi, lo)
    for eps in (0.0, 1e-16, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.4):
        s = base + (other - base) * eps
        v = float(f(s))
        if not math.isfinite(v):
            continue
        if side == "lo" and v <= target:
            return s, v
        if side == "hi" and v >= target:
            return s, v
    return None


def _check_in_image(branch: MonotoneBranch, y) -> None:
    arr = np.asarray(y, dtype=float)
    ok = (arr > branch.image_lo) & (arr < branch.image_hi)
    if not np.all(ok):
        bad = float(arr.reshape(-1)[int(np.argmax(~ok.reshape(-1)))])
        raise ImageDomainError(bad, branch.image_lo, branch.image_hi)


def partial_inverse(phi: PhiOperator, branch: MonotoneBranch, y: float) -> float:
    """Solve Phi(s) = y for s on the branch; y must lie strictly inside the image."""
    _check_in_image(branch, y)
    if branch.inverse is not None:
        s = float(branch.inverse(np.asarray(y, dtype=float)))
        return min(max(s, branch.lo), branch.hi)
    f, orient = _oriented(phi, branch)
    ty = orient * float(y)
    lo = max(branch.lo, -WORK_WINDOW)
    hi = min(branch.hi, WORK_WINDOW)
    below = _bracket_endpoint(f, lo, hi, ty, "lo")
    above = _bracket_endpoint(f, lo, hi, ty, "hi")
    if below is None or above is None:
        raise ImageDomainError(
            float(y), branch.image_lo, branch.image_hi,
            "no bisection bracket inside the working window",
        )
    a, _ = below
    b, _ = above
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (a + b)
        if mid == a or mid == b or (b - a) <= BISECT_TOL:
            break
        v = float(f(mid))
        if v < ty:
            a = mid
        elif v > ty:
            b = mid
        else:
            return mid
    return 0.5 * (a + b)


def partial_inverse_array(
    phi: PhiOperator, branch: MonotoneBranch, y: np.ndarray
) -> np.ndarray:
    """Vectorized branch-wise inversion; same contract as partial_inverse."""
    y = np.asarray(y, dtype=float)
    _check_in_image(branch, y)
    if branch.inverse is not None:
        s = np.asarray(branch.inverse(y), dtype=float)
        return np.clip(s, branch.lo, branch.hi)
    f, orient = _oriented(phi, branch)
    ty = orient * y
    lo = max(branch.lo, -WORK_WINDOW)
    hi = min(branch.hi, WORK_WINDOW)
    below = _bracket_endpoint(f, lo, hi, float(np.min(ty)), "lo")
    above = _bracket_endpoint(f, lo, hi, float(np.max(ty)), "hi")
    if below is None or above is None:
        raise ImageDomainError(
            float(y.reshape(-1)[0]), branch.image_lo, branch.image_hi,
            "no bisection bracket inside the working window",
        )
    a = np.full(y.shape, below[0])
    b = np.full(y.shape, above[0])
    for _ in range(120):
        mid = 0.5 * (a + b)
        with np.errstate(all="ignore"):
            v = np.asarray(f(mid), dtype=float)
        low = v < ty
        a = np.where(low, mid, a)
        b = np.where(low, b, mid)
        if float(np.max(b - a)) <= BISECT_TOL:
            break
    return 0.5 * (a + b)

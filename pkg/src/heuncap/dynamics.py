"""
The stiff planar vector field, its Heun discretization and the 1D restriction.

The system is

    x1' = -2 x1 - x1**2 / (1 + x2**4)
    x2' = -lam x2 - x2**2 / (1 + x1**4)

with ``lam = 30`` by default. One Heun step of size ``h`` is
``F(x) = x + h/2 (f(x) + f(x + h f(x)))``. Both coordinate axes are invariant
under ``F``; on the x2-axis ``F(0, x) = (0, g(x))`` with ``g`` a quartic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from .interval import (
    Box,
    Interval,
    add_lohi,
    div_lohi,
    mul_lohi,
    powi_lohi,
    scale_lohi,
    sub_lohi,
)

__all__ = [
    "VectorFieldParams",
    "Point2",
    "DEFAULT_PARAMS",
    "G_COEFFS",
    "CriticalPointError",
    "vector_field",
    "heun_map",
    "heun_step",
    "heun_map_iv",
    "heun_map_boxes",
    "restricted_map_g",
    "restricted_map_poly",
    "restricted_map_coeffs",
    "stability_R",
    "schwarzian_g",
    "jacobian_eigs_at_origin",
    "fd_jacobian_at_origin",
    "contraction_bound_check",
]


@dataclass(frozen=True)
class VectorFieldParams:
    lambda_stiff: float = 30.0
    h: float = 0.1

    def __post_init__(self):
        if not self.lambda_stiff > 0:
            raise ValueError(f"lambda_stiff must be positive, got {self.lambda_stiff!r}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h!r}")

    def h_interval(self) -> Interval:
        # the decimal text of h, not its binary64 value, is what gets enclosed
        return Interval.from_decimal(repr(float(self.h)))

    def lambda_interval(self) -> Interval:
        return Interval.from_decimal(repr(float(self.lambda_stiff)))

    @property
    def is_default(self) -> bool:
        return self.lambda_stiff == 30.0 and self.h == 0.1


DEFAULT_PARAMS = VectorFieldParams()

# g(x) = 5/2 x - 1/10 x^2 - 1/50 x^3 - 1/2000 x^4, lowest degree first
G_COEFFS = (0.0, 2.5, -0.1, -0.02, -0.0005)


class Point2(NamedTuple):
    x1: float
    x2: float


class CriticalPointError(ArithmeticError):
    """The Schwarzian derivative is undefined where g' vanishes."""


def _field(x1, x2, lam):
    return (
        -2.0 * x1 - x1**2 / (1.0 + x2**4),
        -lam * x2 - x2**2 / (1.0 + x1**4),
    )


def heun_step(x1, x2, lam=30.0, h=0.1):
    """One Heun step; works elementwise on floats or numpy arrays."""
    k1 = _field(x1, x2, lam)
    k2 = _field(x1 + h * k1[0], x2 + h * k1[1], lam)
    return (
        x1 + h / 2 * (k1[0] + k2[0]),
        x2 + h / 2 * (k1[1] + k2[1]),
    )


def vector_field(p, params: VectorFieldParams = DEFAULT_PARAMS) -> Point2:
    return Point2(*_field(p[0], p[1], params.lambda_stiff))


def heun_map(p, params: VectorFieldParams = DEFAULT_PARAMS) -> Point2:
    return Point2(*heun_step(p[0], p[1], params.lambda_stiff, params.h))


# ---------------------------------------------------------------------------
# Interval version
# ---------------------------------------------------------------------------


def _field_iv(x1, x2, lam: Interval):
    # x1, x2 are (lo, hi) pairs; expression order follows the scalar formula
    one = (1.0, 1.0)
    d2 = add_lohi(*one, *powi_lohi(*x2, 4))
    f1 = sub_lohi(*scale_lohi(*x1, -2.0), *div_lohi(*powi_lohi(*x1, 2), *d2))
    d1 = add_lohi(*one, *powi_lohi(*x1, 4))
    neg_lam = (-lam.hi, -lam.lo)
    f2 = sub_lohi(*mul_lohi(*neg_lam, *x2), *div_lohi(*powi_lohi(*x2, 2), *d1))
    return f1, f2


def heun_map_boxes(boxes: np.ndarray, params: VectorFieldParams = DEFAULT_PARAMS) -> np.ndarray:
    """Interval Heun map applied to every row of an ``(N, 4)`` box array."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    h = params.h_interval()
    half_h = (h.lo * 0.5, h.hi * 0.5)  # exact: halving a normal float
    lam = params.lambda_interval()
    y1 = (boxes[:, 0], boxes[:, 1])
    y2 = (boxes[:, 2], boxes[:, 3])

    k1 = _field_iv(y1, y2, lam)
    p1 = add_lohi(*y1, *mul_lohi(h.lo, h.hi, *k1[0]))
    p2 = add_lohi(*y2, *mul_lohi(h.lo, h.hi, *k1[1]))
    k2 = _field_iv(p1, p2, lam)
    z1 = add_lohi(*y1, *mul_lohi(*half_h, *add_lohi(*k1[0], *k2[0])))
    z2 = add_lohi(*y2, *mul_lohi(*half_h, *add_lohi(*k1[1], *k2[1])))

    out = np.empty_like(boxes)
    out[:, 0], out[:, 1] = z1
    out[:, 2], out[:, 3] = z2
    return out


def heun_map_iv(b: Box, params: VectorFieldParams = DEFAULT_PARAMS) -> Box:
    """Box enclosing ``{F(p) : p in b}``."""
    return Box.from_row(heun_map_boxes(b.to_row(), params)[0])


# ---------------------------------------------------------------------------
# Restriction to the x2-axis
# ---------------------------------------------------------------------------


def _axis_step(x, lam, h):
    # x2-component of F(0, x); x may be a float, array or Polynomial
    u = -lam * x - x * x
    q = x + h * u
    return x + h / 2 * (u + (-lam * q - q * q))


class _PolyArray:
    """Polynomials in x whose coefficients are arrays (one per parameter value)."""

    __array_ufunc__ = None  # make ndarray * _PolyArray defer to __rmul__

    def __init__(self, coef):
        self.coef = list(coef)

    def __add__(self, other):
        if not isinstance(other, _PolyArray):
            other = _PolyArray([other])
        n = max(len(self.coef), len(other.coef))
        a = self.coef + [0.0] * (n - len(self.coef))
        b = other.coef + [0.0] * (n - len(other.coef))
        return _PolyArray([u + v for u, v in zip(a, b)])

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, _PolyArray):
            return _PolyArray([c * other for c in self.coef])
        out = [0.0] * (len(self.coef) + len(other.coef) - 1)
        for i, u in enumerate(self.coef):
            for j, v in enumerate(other.coef):
                out[i + j] = out[i + j] + u * v
        return _PolyArray(out)

    __rmul__ = __mul__

    def __neg__(self):
        return _PolyArray([-c for c in self.coef])

    def __sub__(self, other):
        return self + (-other)


def restricted_map_coeffs(lambdas, h: float = 0.1) -> np.ndarray:
    """Quartic coefficients of ``g_lambda`` for many stiffness values at once.

    Returns an ``(n, 5)`` array, lowest degree first.
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    ident = _PolyArray([np.zeros_like(lam), np.ones_like(lam)])
    g = _axis_step(ident, lam, float(h))
    coef = [np.broadcast_to(c, lam.shape) for c in g.coef]
    coef += [np.zeros_like(lam)] * (5 - len(coef))
    return np.stack(coef[:5], axis=1)


def restricted_map_poly(params: VectorFieldParams = DEFAULT_PARAMS) -> Polynomial:
    """The axis restriction ``g`` as an explicit quartic polynomial.

    Obtained by running the Heun step on the identity polynomial, so the
    coefficients come from the map itself rather than a hand expansion. For
    the default parameters the printed coefficients are returned instead.
    """
    if params.is_default:
        return Polynomial(G_COEFFS)
    return Polynomial(restricted_map_coeffs(params.lambda_stiff, params.h)[0])


def restricted_map_g(x, params: VectorFieldParams = DEFAULT_PARAMS):
    if params.is_default:
        c = G_COEFFS
        return x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])))
    return heun_step(0.0 * x, x, params.lambda_stiff, params.h)[1]


def stability_R(z):
    """Heun amplification factor ``1 + z + z**2/2`` (Horner form)."""
    return 1.0 + z * (1.0 + z / 2.0)


def schwarzian_g(x, params: VectorFieldParams = DEFAULT_PARAMS, *, tol: float = 1e-6):
    """Schwarzian derivative ``g'''/g' - 3/2 (g''/g')**2`` of the restricted map.

    Raises :class:`CriticalPointError` where ``|g'(x)| <= tol``.
    """
    g = restricted_map_poly(params)
    d1, d2, d3 = g.deriv(1)(x), g.deriv(2)(x), g.deriv(3)(x)
    if np.any(np.abs(d1) <= tol):
        raise CriticalPointError(f"g' vanishes (|g'| <= {tol}) near x = {x!r}")
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


# ---------------------------------------------------------------------------
# Linearization at the origin and the x1 contraction estimate
# ---------------------------------------------------------------------------


def jacobian_eigs_at_origin(params: VectorFieldParams = DEFAULT_PARAMS) -> tuple[float, float]:
    """Eigenvalues of DF(0): the stability function at ``-2h`` and ``-lam h``."""
    return stability_R(-2.0 * params.h), stability_R(-params.lambda_stiff * params.h)


def fd_jacobian_at_origin(params: VectorFieldParams = DEFAULT_PARAMS, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the Heun map at the origin."""
    jac = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        fp = np.array(heun_map(e, params))
        fm = np.array(heun_map(-e, params))
        jac[:, j] = (fp - fm) / (2 * step)
    return jac


def contraction_bound_check(p, params: VectorFieldParams = DEFAULT_PARAMS, factor: float = 0.83):
    """True where ``0 <= F(p).x1 <= factor * p.x1``.

    Accepts a single point or a pair of arrays and answers elementwise.
    """
    x1, x2 = p
    y1, _ = heun_step(x1, x2, params.lambda_stiff, params.h)
    ok = (0.0 <= y1) & (y1 <= factor * x1)
    return bool(ok) if np.ndim(ok) == 0 else ok

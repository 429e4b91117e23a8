"""
Interval arithmetic on binary64 with outward rounding.

Every endpoint operation is evaluated in native precision and then pushed one
representable value outward (``nextafter``) whenever the native result is not
exact. Exactness is decided with error-free transforms (TwoSum for addition,
Dekker's TwoProduct for multiplication and the exact division remainder), so
exact results such as ``0 * x`` or ``1 + 2`` are left untouched. No global
rounding-mode state is touched; all kernels are pure and thread-safe.

The kernels work elementwise on numpy arrays, which lets the proof engine push
a whole cloud of boxes through the map at once. The scalar :class:`Interval`
and :class:`Box` types are thin wrappers over the same kernels.

A box array is an ``(N, 4)`` float array with columns
``x1_lo, x1_hi, x2_lo, x2_hi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "IntervalError",
    "ZeroDivisionIntervalError",
    "Interval",
    "Box",
    "BoxKey",
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_div",
    "iv_powi",
    "iv_scale",
    "box_split",
    "box_width",
    "box_mid",
    "box_contains",
    "box_hull",
    "split_boxes",
    "box_widths",
]

Number = Union[int, float]

_INF = np.inf
_SPLITTER = 134217729.0  # 2**27 + 1, Veltkamp split constant
# Outside [_TINY, _HUGE] the Dekker error terms can underflow or overflow, so
# results there are widened unconditionally.
_TINY = 2.0 ** -900
_HUGE = 2.0 ** 995


class IntervalError(ArithmeticError):
    """Raised when an operation cannot produce a valid finite interval."""


class ZeroDivisionIntervalError(IntervalError, ZeroDivisionError):
    """Raised when the divisor interval contains zero."""


# ---------------------------------------------------------------------------
# Directed-rounding kernels (elementwise, arrays or scalars)
# ---------------------------------------------------------------------------


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


def _two_sum_err(a, b, s):
    # Knuth TwoSum: a + b == s + err exactly (barring overflow).
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_err(a, b, p):
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add_down(a, b):
    s = np.add(a, b)
    return np.where(_two_sum_err(a, b, s) < 0, _down(s), s)


def add_up(a, b):
    s = np.add(a, b)
    return np.where(_two_sum_err(a, b, s) > 0, _up(s), s)


def sub_down(a, b):
    return add_down(a, np.negative(b))


def sub_up(a, b):
    return add_up(a, np.negative(b))


def _mul_parts(a, b):
    with np.errstate(over="ignore", under="ignore"):
        p = np.multiply(a, b)
    zero = (a == 0) | (b == 0)
    safe = (np.abs(p) >= _TINY) & (np.abs(a) < _HUGE) & (np.abs(b) < _HUGE)
    with np.errstate(invalid="ignore", over="ignore"):
        err = np.where(safe, _two_prod_err(a, b, np.where(safe, p, 0.0)), 0.0)
    return p, zero, safe, err


def mul_down(a, b):
    p, zero, safe, err = _mul_parts(a, b)
    widen = ~zero & (~safe | (err < 0))
    return np.where(widen, _down(p), p)


def mul_up(a, b):
    p, zero, safe, err = _mul_parts(a, b)
    widen = ~zero & (~safe | (err > 0))
    return np.where(widen, _up(p), p)


def _div_parts(a, b):
    # Sign of the exact quotient error: a/b == q + r/b with r = a - q*b exact.
    with np.errstate(over="ignore", under="ignore"):
        q = np.divide(a, b)
    zero = a == 0
    absq = np.abs(q)
    safe = (
        (absq >= _TINY) & (absq < _HUGE)
        & (np.abs(a) >= _TINY) & (np.abs(a) < _HUGE)
        & (np.abs(b) >= _TINY) & (np.abs(b) < _HUGE)
    )
    with np.errstate(invalid="ignore", over="ignore"):
        qs = np.where(safe, q, 0.0)
        bs = np.where(safe, b, 1.0)
        p = qs * bs
        r = (np.where(safe, a, 0.0) - p) - _two_prod_err(qs, bs, p)
    direction = np.sign(r) * np.sign(b)
    return q, zero, safe, direction


def div_down(a, b):
    q, zero, safe, d = _div_parts(a, b)
    widen = ~zero & (~safe | (d < 0))
    return np.where(widen, _down(q), q)


def div_up(a, b):
    q, zero, safe, d = _div_parts(a, b)
    widen = ~zero & (~safe | (d > 0))
    return np.where(widen, _up(q), q)


# ---------------------------------------------------------------------------
# Interval kernels on (lo, hi) array pairs
# ---------------------------------------------------------------------------


def _checked(lo, hi):
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise IntervalError("interval endpoint overflowed to a non-finite value")
    return lo, hi


def add_lohi(alo, ahi, blo, bhi):
    return _checked(add_down(alo, blo), add_up(ahi, bhi))


def sub_lohi(alo, ahi, blo, bhi):
    return _checked(sub_down(alo, bhi), sub_up(ahi, blo))


def mul_lohi(alo, ahi, blo, bhi):
    lo = np.minimum(
        np.minimum(mul_down(alo, blo), mul_down(alo, bhi)),
        np.minimum(mul_down(ahi, blo), mul_down(ahi, bhi)),
    )
    hi = np.maximum(
        np.maximum(mul_up(alo, blo), mul_up(alo, bhi)),
        np.maximum(mul_up(ahi, blo), mul_up(ahi, bhi)),
    )
    return _checked(lo, hi)


def div_lohi(alo, ahi, blo, bhi):
    if np.any((np.asarray(blo) <= 0) & (np.asarray(bhi) >= 0)):
        raise ZeroDivisionIntervalError("divisor interval contains zero")
    lo = np.minimum(
        np.minimum(div_down(alo, blo), div_down(alo, bhi)),
        np.minimum(div_down(ahi, blo), div_down(ahi, bhi)),
    )
    hi = np.maximum(
        np.maximum(div_up(alo, blo), div_up(alo, bhi)),
        np.maximum(div_up(ahi, blo), div_up(ahi, bhi)),
    )
    return _checked(lo, hi)


def scale_lohi(alo, ahi, c):
    c = float(c)
    if not np.isfinite(c):
        raise IntervalError(f"non-finite scale factor {c!r}")
    if c >= 0:
        return _checked(mul_down(alo, c), mul_up(ahi, c))
    return _checked(mul_down(ahi, c), mul_up(alo, c))


def _pow_nonneg(m, n, rnd):
    out = m
    for _ in range(n - 1):
        out = rnd(out, m)
    return out


def powi_lohi(alo, ahi, n):
    if n not in (1, 2, 3, 4):
        raise ValueError(f"unsupported integer power {n!r}")
    alo = np.asarray(alo, dtype=float)
    ahi = np.asarray(ahi, dtype=float)
    if n == 1:
        return alo, ahi
    if n % 2 == 0:
        mlo = np.where(alo > 0, alo, np.where(ahi < 0, -ahi, 0.0))
        mhi = np.maximum(np.abs(alo), np.abs(ahi))
        lo = np.maximum(_pow_nonneg(mlo, n, mul_down), 0.0)
        hi = _pow_nonneg(mhi, n, mul_up)
        return _checked(lo, hi)
    # odd power is monotone: x**n = sign(x) * |x|**n
    lo = np.where(
        alo >= 0,
        _pow_nonneg(np.abs(alo), n, mul_down),
        -_pow_nonneg(np.abs(alo), n, mul_up),
    )
    hi = np.where(
        ahi >= 0,
        _pow_nonneg(np.abs(ahi), n, mul_up),
        -_pow_nonneg(np.abs(ahi), n, mul_down),
    )
    return _checked(lo, hi)


# ---------------------------------------------------------------------------
# Scalar types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]`` with finite binary64 endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise IntervalError(f"non-finite endpoint in [{lo!r}, {hi!r}]")
        if lo > hi:
            raise IntervalError(f"lower endpoint exceeds upper: [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: Number) -> Interval:
        return cls(x, x)

    @classmethod
    def from_decimal(cls, text: str | Number) -> Interval:
        """Smallest interval with machine endpoints containing a decimal literal.

        ``Interval.from_decimal("0.1")`` contains the rational 1/10 even though
        no binary64 number equals it.
        """
        exact = Fraction(str(text).strip())
        x = float(exact)
        fx = Fraction(x)
        if fx == exact:
            return cls(x, x)
        if fx < exact:
            return cls(x, float(_up(x)))
        return cls(float(_down(x)), x)

    @property
    def width(self) -> float:
        """``hi - lo`` rounded upward."""
        return float(sub_up(self.hi, self.lo))

    @property
    def mid(self) -> float:
        return _midpoint(self.lo, self.hi)

    def contains(self, x: Number | Interval) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __add__(self, other):
        return iv_add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return iv_sub(self, _coerce(other))

    def __rsub__(self, other):
        return iv_sub(_coerce(other), self)

    def __mul__(self, other):
        return iv_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return iv_div(self, _coerce(other))

    def __rtruediv__(self, other):
        return iv_div(_coerce(other), self)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pow__(self, n: int):
        return iv_powi(self, n)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    return Interval.point(float(x))


def _wrap(lohi) -> Interval:
    lo, hi = lohi
    return Interval(float(lo), float(hi))


def iv_add(a: Interval, b: Interval) -> Interval:
    return _wrap(add_lohi(a.lo, a.hi, b.lo, b.hi))


def iv_sub(a: Interval, b: Interval) -> Interval:
    return _wrap(sub_lohi(a.lo, a.hi, b.lo, b.hi))


def iv_mul(a: Interval, b: Interval) -> Interval:
    return _wrap(mul_lohi(a.lo, a.hi, b.lo, b.hi))


def iv_div(a: Interval, b: Interval) -> Interval:
    return _wrap(div_lohi(a.lo, a.hi, b.lo, b.hi))


def iv_powi(a: Interval, n: int) -> Interval:
    """Tight integer power; even powers of intervals straddling 0 start at 0."""
    return _wrap(powi_lohi(a.lo, a.hi, n))


def iv_scale(a: Interval, c: float) -> Interval:
    return _wrap(scale_lohi(a.lo, a.hi, c))


class BoxKey(NamedTuple):
    """Exact endpoint quadruple used to deduplicate boxes."""

    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float


@dataclass(frozen=True, slots=True)
class Box:
    """Axis-aligned rectangle ``x1 × x2`` in the plane."""

    x1: Interval
    x2: Interval

    @classmethod
    def from_bounds(cls, x1_lo, x1_hi, x2_lo, x2_hi) -> Box:
        return cls(Interval(x1_lo, x1_hi), Interval(x2_lo, x2_hi))

    @classmethod
    def from_row(cls, row) -> Box:
        return cls.from_bounds(*(float(v) for v in row))

    def to_row(self) -> np.ndarray:
        return np.array([self.x1.lo, self.x1.hi, self.x2.lo, self.x2.hi])

    def key(self) -> BoxKey:
        # +0.0 folds -0.0 into 0.0 so equal boxes share a key
        return BoxKey(self.x1.lo + 0.0, self.x1.hi + 0.0,
                      self.x2.lo + 0.0, self.x2.hi + 0.0)


def box_width(b: Box) -> tuple[float, float]:
    return b.x1.width, b.x2.width


def box_mid(b: Box) -> tuple[float, float]:
    return b.x1.mid, b.x2.mid


def box_contains(b: Box, p: Sequence[float]) -> bool:
    return b.x1.contains(p[0]) and b.x2.contains(p[1])


def box_hull(a: Box, b: Box) -> Box:
    return Box(a.x1.hull(b.x1), a.x2.hull(b.x2))


# ---------------------------------------------------------------------------
# Box arrays
# ---------------------------------------------------------------------------


def _midpoint(lo, hi):
    m = lo + 0.5 * (hi - lo)
    return np.clip(m, lo, hi) if isinstance(m, np.ndarray) else float(min(max(m, lo), hi))


def box_widths(boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upward-rounded widths of every row of a box array."""
    return sub_up(boxes[:, 1], boxes[:, 0]), sub_up(boxes[:, 3], boxes[:, 2])


def _bisect(boxes, lo_col, hi_col):
    mid = _midpoint(boxes[:, lo_col], boxes[:, hi_col])
    left = boxes.copy()
    right = boxes.copy()
    left[:, hi_col] = mid
    right[:, lo_col] = mid
    return np.concatenate([left, right])


def split_boxes(boxes: np.ndarray, t1: float, t2: float) -> np.ndarray:
    """Bisect rows until every x1 width is ``<= t1`` and x2 width ``<= t2``.

    x1 is bisected first whenever it is too wide, and x2 only once x1 fits.
    The resulting tiling is the same set of pieces a depth-first splitter
    produces; only the row order differs.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError("split thresholds must be positive")
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    for lo_col, hi_col, t in ((0, 1, t1), (2, 3, t2)):
        pending = boxes
        fitted = [pending[:0]]
        while len(pending):
            wide = sub_up(pending[:, hi_col], pending[:, lo_col]) > t
            fitted.append(pending[~wide])
            pending = _bisect(pending[wide], lo_col, hi_col)
        boxes = np.concatenate(fitted)
    return boxes


def box_split(b: Box, t1: float, t2: float) -> list[Box]:
    return [Box.from_row(r) for r in split_boxes(b.to_row()[None, :], t1, t2)]

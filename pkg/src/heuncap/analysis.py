"""
Plain floating-point exploration of the Heun map.

Nothing in this module is rigorous. It locates the attracting cycle of the
restricted map, rasterizes basins, produces orbit and cobweb data and scans the
stiffness parameter for the period-doubling cascade. The proof engine only
consumes the sink points found here as targets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DEFAULT_PARAMS,
    VectorFieldParams,
    heun_step,
    restricted_map_coeffs,
    stability_R,
)

__all__ = [
    "NoStableCycleError",
    "SinkOrbit",
    "CellClass",
    "BasinSpec",
    "BasinGrid",
    "Trajectory",
    "CascadeScan",
    "g_coeffs",
    "critical_point_of_g",
    "positive_root_of_g",
    "attractor_period",
    "find_sink_orbit",
    "classify_points",
    "basin_raster",
    "phase_trajectory",
    "cobweb_data",
    "bifurcation_scan",
    "stability_table",
    "stability_boundary",
]


class NoStableCycleError(RuntimeError):
    """The critical orbit did not settle on a detectable cycle."""


# ---------------------------------------------------------------------------
# The restricted map as vectorized quartics
# ---------------------------------------------------------------------------


def g_coeffs(params: VectorFieldParams = DEFAULT_PARAMS) -> np.ndarray:
    if params.is_default:
        from .dynamics import G_COEFFS
        return np.array(G_COEFFS)
    return restricted_map_coeffs(params.lambda_stiff, params.h)[0]


def _g(c, x):
    # c has shape (..., 5); evaluates every row at the matching x
    return x * (c[..., 1] + x * (c[..., 2] + x * (c[..., 3] + x * c[..., 4])))


def _dg(c, x):
    return c[..., 1] + x * (2 * c[..., 2] + x * (3 * c[..., 3] + x * 4 * c[..., 4]))


def _bisect_sign_change(fun, lo, hi, iters=80, tol=0.0):
    # vectorized bisection; fun(lo) and fun(hi) must have opposite signs
    flo = np.sign(fun(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        left = np.sign(fun(mid)) == flo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
        if tol and np.all(hi - lo <= tol):
            break
    return 0.5 * (lo + hi)


def _critical_points(c):
    # g'(0) = R(-lam h) >= 1/2 > 0 and g' -> -inf, so double until g' < 0
    hi = np.ones(c.shape[0])
    for _ in range(64):
        pos = _dg(c, hi) >= 0
        if not pos.any():
            break
        hi = np.where(pos, 2 * hi, hi)
    return _bisect_sign_change(lambda x: _dg(c, x), np.zeros_like(hi), hi)


def _positive_roots(c, crit):
    hi = np.maximum(np.full_like(crit, 20.0), crit)
    for _ in range(64):
        pos = _g(c, hi) >= 0
        if not pos.any():
            break
        hi = np.where(pos, 2 * hi, hi)
    return _bisect_sign_change(lambda x: _g(c, x), crit, hi)


def critical_point_of_g(params: VectorFieldParams = DEFAULT_PARAMS) -> float:
    """First positive zero of ``g'`` (the maximum of the unimodal map)."""
    return float(_critical_points(g_coeffs(params)[None, :])[0])


def positive_root_of_g(params: VectorFieldParams = DEFAULT_PARAMS) -> float:
    """Positive zero ``r*`` of ``g``; ``[0, r*]`` is the folding interval."""
    c = g_coeffs(params)[None, :]
    return float(_positive_roots(c, _critical_points(c))[0])


# ---------------------------------------------------------------------------
# Attracting cycle
# ---------------------------------------------------------------------------


def _detect_periods(samples, tol, max_period):
    """Smallest p with |x[i+p] - x[i]| < tol over the sample window, per row."""
    samples = np.atleast_2d(samples)
    n, m = samples.shape
    period = np.zeros(n, dtype=int)
    finite = np.all(np.isfinite(samples), axis=1)
    for p in range(1, min(max_period, m - 1) + 1):
        ok = np.all(np.abs(samples[:, p:] - samples[:, :-p]) < tol, axis=1)
        period = np.where((period == 0) & ok & finite, p, period)
    return period  # 0 means no cycle found


def _iterate_rows(c, x, steps, escape=1e3):
    # iterate many quartics at once; escaped orbits become nan and stay there
    with np.errstate(invalid="ignore", over="ignore"):
        for _ in range(steps):
            x = _g(c, x)
            x = np.where(np.abs(x) > escape, np.nan, x)
    return x


def _record_rows(c, x, n, escape=1e3):
    out = np.empty((len(x), n))
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(n):
            x = _g(c, x)
            x = np.where(np.abs(x) > escape, np.nan, x)
            out[:, k] = x
    return out


def attractor_period(params: VectorFieldParams = DEFAULT_PARAMS, *, transient: int = 1000,
                     samples: int = 256, tol: float = 1e-6, max_period: int = 64) -> int | None:
    """Period of the attractor reached from the critical point, or None."""
    c = g_coeffs(params)
    return _scalar_period(c, transient, samples, tol, max_period)


def _scalar_period(c, transient, samples, tol, max_period):
    # plain-float loop: faster than numpy for a single long orbit
    c1, c2, c3, c4 = (float(v) for v in c[1:5])
    x = float(_critical_points(np.asarray(c)[None, :])[0])
    for _ in range(transient):
        x = x * (c1 + x * (c2 + x * (c3 + x * c4)))
        if not abs(x) <= 1e3:
            return None
    xs = np.empty(samples)
    for k in range(samples):
        x = x * (c1 + x * (c2 + x * (c3 + x * c4)))
        if not abs(x) <= 1e3:
            return None
        xs[k] = x
    p = int(_detect_periods(xs, tol, max_period)[0])
    return p or None


@dataclass(frozen=True)
class SinkOrbit:
    """Attracting cycle of ``g`` in image order: ``g(points[i]) = points[i+1]``."""

    points: tuple[float, ...]
    residual: float
    multiplier: float

    @property
    def period(self) -> int:
        return len(self.points)

    def cycle_error(self, params: VectorFieldParams = DEFAULT_PARAMS) -> float:
        c = g_coeffs(params)
        pts = np.array(self.points)
        return float(np.max(np.abs(_g(c, pts) - np.roll(pts, -1))))


def _polish_cycle_point(c, x, period, *, max_iter=100):
    """Root of g^p(x) - x near x by Newton steps kept inside a sign bracket."""

    def G(y):
        d = 1.0
        z = y
        for _ in range(period):
            d *= _dg(c, z)
            z = _g(c, z)
        return z - y, d - 1.0

    delta = 1e-9 * max(1.0, abs(x))
    lo, hi = x - delta, x + delta
    while np.sign(G(lo)[0]) == np.sign(G(hi)[0]) and delta < 1e-1:
        delta *= 4
        lo, hi = x - delta, x + delta
    if np.sign(G(lo)[0]) == np.sign(G(hi)[0]):
        return x  # no bracket; keep the converged orbit value
    s_lo = np.sign(G(lo)[0])
    for _ in range(max_iter):
        val, der = G(x)
        if val == 0:
            break
        if np.sign(val) == s_lo:
            lo = x
        else:
            hi = x
        step = val / der if der != 0 else np.inf
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == x or hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            x = nxt
            break
        x = nxt
    return x


def find_sink_orbit(params: VectorFieldParams = DEFAULT_PARAMS, *, warmup: int = 500,
                    max_iter: int = 10_000, tol: float = 1e-6,
                    max_period: int = 64) -> SinkOrbit:
    """Attracting cycle reached from the critical point, polished to full precision.

    The returned cycle starts at the cycle point nearest the critical point.
    """
    c = g_coeffs(params)
    crit = critical_point_of_g(params)
    x = crit
    for _ in range(warmup):
        x = float(_g(c, x))
        if not abs(x) <= 1e3:
            raise NoStableCycleError("critical orbit escapes to infinity")
    window = 4 * max_period
    done = warmup
    period = 0
    while done < max_iter:
        xs = np.empty(window)
        for k in range(window):
            x = float(_g(c, x))
            if not abs(x) <= 1e3:
                raise NoStableCycleError("critical orbit escapes to infinity")
            xs[k] = x
        done += window
        period = int(_detect_periods(xs, tol, max_period)[0])
        if period:
            break
    if not period:
        raise NoStableCycleError(f"no cycle of period <= {max_period} after {max_iter} iterations")

    orbit = [x]
    for _ in range(period - 1):
        orbit.append(float(_g(c, orbit[-1])))
    start = int(np.argmin([abs(p - crit) for p in orbit]))
    orbit = orbit[start:] + orbit[:start]
    pts = tuple(float(_polish_cycle_point(c, p, period)) for p in orbit)

    arr = np.array(pts)
    y = arr.copy()
    for _ in range(period):
        y = _g(c, y)
    residual = float(np.max(np.abs(y - arr)))
    multiplier = float(np.prod(_dg(c, arr)))
    return SinkOrbit(points=pts, residual=residual, multiplier=multiplier)


# ---------------------------------------------------------------------------
# Basins, orbits and cobwebs in the plane
# ---------------------------------------------------------------------------


class CellClass(enum.IntEnum):
    UNDECIDED = 0
    SINK = 1
    ORIGIN = 2
    ESCAPED = 3


# 8-bit gray level used in PGM output
GRAY = {CellClass.SINK: 255, CellClass.ORIGIN: 128,
        CellClass.ESCAPED: 64, CellClass.UNDECIDED: 0}


@dataclass(frozen=True)
class BasinSpec:
    x1_range: tuple[float, float] = (0.0, 9.0)
    x2_range: tuple[float, float] = (0.0, 9.0)
    resolution: tuple[int, int] = (200, 200)  # (n_x1, n_x2)
    capture_radius: float = 0.1
    confirm_steps: int = 8
    escape_radius: float = 1e3
    origin_radius: float = 1e-6
    max_iter: int = 2000

    def __post_init__(self):
        if min(self.resolution) < 2:
            raise ValueError("basin resolution must be at least 2 per axis")
        if not (self.x1_range[0] < self.x1_range[1] and self.x2_range[0] < self.x2_range[1]):
            raise ValueError("basin ranges must be increasing")

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        n1, n2 = self.resolution
        (a1, b1), (a2, b2) = self.x1_range, self.x2_range
        c1 = a1 + (np.arange(n1) + 0.5) * (b1 - a1) / n1
        c2 = a2 + (np.arange(n2) + 0.5) * (b2 - a2) / n2
        return c1, c2


@dataclass
class BasinGrid:
    spec: BasinSpec
    cells: np.ndarray  # (n_x2, n_x1) of CellClass values, row 0 at the lowest x2

    def counts(self) -> dict[CellClass, int]:
        return {k: int(np.sum(self.cells == k)) for k in CellClass}

    def to_pgm(self) -> bytes:
        """Binary 8-bit PGM, top row = largest x2."""
        lut = np.zeros(len(CellClass), dtype=np.uint8)
        for k, v in GRAY.items():
            lut[k] = v
        img = lut[self.cells[::-1]]
        h, w = img.shape
        return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()


def classify_points(x1, x2, params: VectorFieldParams = DEFAULT_PARAMS,
                    sink: SinkOrbit | None = None, spec: BasinSpec = BasinSpec()) -> np.ndarray:
    """Iterate the Heun map from each point and classify where it ends up."""
    if sink is None:
        sink = find_sink_orbit(params)
    x1 = np.asarray(x1, dtype=float).ravel().copy()
    x2 = np.asarray(x2, dtype=float).ravel().copy()
    cls = np.full(x1.shape, CellClass.UNDECIDED, dtype=np.int8)
    streak = np.zeros(x1.shape, dtype=int)
    idx = np.arange(len(x1))
    sink_x2 = np.array(sink.points)
    r = spec.capture_radius
    lam, h = params.lambda_stiff, params.h
    for _ in range(spec.max_iter):
        if not len(idx):
            break
        with np.errstate(over="ignore", invalid="ignore"):
            x1, x2 = heun_step(x1, x2, lam, h)
        norm = np.maximum(np.abs(x1), np.abs(x2))
        near = (np.abs(x1) < r) & (np.min(np.abs(x2[:, None] - sink_x2[None, :]), axis=1) < r)
        streak = np.where(near, streak + 1, 0)
        escaped = ~(norm <= spec.escape_radius)  # also catches nan
        origin = norm < spec.origin_radius
        captured = streak >= spec.confirm_steps
        cls[idx[escaped]] = CellClass.ESCAPED
        cls[idx[origin & ~escaped]] = CellClass.ORIGIN
        cls[idx[captured & ~origin & ~escaped]] = CellClass.SINK
        keep = ~(escaped | origin | captured)
        idx, x1, x2, streak = idx[keep], x1[keep], x2[keep], streak[keep]
    return cls


def basin_raster(spec: BasinSpec = BasinSpec(), params: VectorFieldParams = DEFAULT_PARAMS,
                 sink: SinkOrbit | None = None, max_iter: int | None = None) -> BasinGrid:
    if max_iter is not None:
        spec = BasinSpec(**{**spec.__dict__, "max_iter": max_iter})
    c1, c2 = spec.centers()
    g1, g2 = np.meshgrid(c1, c2)
    cls = classify_points(g1, g2, params, sink, spec)
    return BasinGrid(spec=spec, cells=cls.reshape(g1.shape))


@dataclass
class Trajectory:
    points: np.ndarray  # (k, 2)
    escaped: bool = False


def phase_trajectory(p0, n: int, params: VectorFieldParams = DEFAULT_PARAMS,
                     escape: float = 1e100) -> Trajectory:
    """Orbit ``p0, F(p0), ..., F^n(p0)``, cut short if it blows up."""
    if n < 1:
        raise ValueError("n must be at least 1")
    pts = [(float(p0[0]), float(p0[1]))]
    x1, x2 = pts[0]
    for _ in range(n):
        with np.errstate(over="ignore", invalid="ignore"):
            x1, x2 = heun_step(x1, x2, params.lambda_stiff, params.h)
        if not (abs(x1) <= escape and abs(x2) <= escape):
            return Trajectory(np.array(pts), escaped=True)
        pts.append((x1, x2))
    return Trajectory(np.array(pts))


def cobweb_data(x0: float, n: int, params: VectorFieldParams = DEFAULT_PARAMS) -> np.ndarray:
    """Cobweb polyline of ``g`` as an ``(2n, 2, 2)`` array of segments.

    Segment ``2k`` is vertical, ``(x_k, x_k) -> (x_k, x_{k+1})``; segment
    ``2k+1`` is horizontal, ``(x_k, x_{k+1}) -> (x_{k+1}, x_{k+1})``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    c = g_coeffs(params)
    xs = [float(x0)]
    for _ in range(n):
        xs.append(float(_g(c, xs[-1])))
    segs = np.empty((2 * n, 2, 2))
    for k in range(n):
        a, b = xs[k], xs[k + 1]
        segs[2 * k] = ((a, a), (a, b))
        segs[2 * k + 1] = ((a, b), (b, b))
    return segs


# ---------------------------------------------------------------------------
# Stiffness scan
# ---------------------------------------------------------------------------


@dataclass
class CascadeScan:
    lambda_values: np.ndarray
    attractor_samples: np.ndarray  # (n_lambda, n_samples); nan after escape
    periods: list  # int or None per lambda
    doubling_lambdas: list[float] = field(default_factory=list)
    delta_estimates: list[float] = field(default_factory=list)


def _deltas(lams):
    return [(lams[i] - lams[i - 1]) / (lams[i + 1] - lams[i]) for i in range(1, len(lams) - 1)]


def bifurcation_scan(lambda_lo: float = 10.0, lambda_hi: float = 300.0, steps: int = 29001,
                     params: VectorFieldParams = DEFAULT_PARAMS, *, transient: int = 1000,
                     samples: int = 256, tol: float = 1e-6, max_period: int = 64,
                     bisect_transient: int = 10_000, bisect_tol: float = 1e-11) -> CascadeScan:
    """Scan the stiffness parameter and locate the period-doubling cascade.

    Every grid value is iterated from its critical point, all at once. The
    doubling parameters are then refined one at a time by bisection on the
    detected period, using a longer transient because convergence is slow
    next to a doubling.
    """
    if not lambda_lo < lambda_hi:
        raise ValueError("lambda_lo must be below lambda_hi")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    lams = np.linspace(lambda_lo, lambda_hi, steps)
    c = restricted_map_coeffs(lams, params.h)
    x = _critical_points(c)
    x = _iterate_rows(c, x, transient)
    rec = _record_rows(c, x, samples)
    per = _detect_periods(rec, tol, max_period)
    periods = [int(p) if p else None for p in per]

    def period_at(lam):
        cc = restricted_map_coeffs(lam, params.h)[0]
        return _scalar_period(cc, bisect_transient, samples, tol, max_period)

    doublings = []
    # first grid point showing period 2 right after period 1 seeds the search
    p_prev, i_prev = None, None
    start = None
    for i, p in enumerate(periods):
        if p is None:
            continue
        if p_prev == 1 and p == 2:
            start = (i_prev, i)
            break
        p_prev, i_prev = p, i
    if start is not None:
        P = 1
        a, j = lams[start[0]], start[1]
        while 2 * P <= max_period:
            # next grid point (at or after j) whose period is confirmed > P
            b = None
            while j < len(lams):
                q = period_at(lams[j])
                if q is None or q > P:
                    b = lams[j]
                    break
                a = lams[j]
                j += 1
            if b is None:
                break
            while b - a > bisect_tol:
                m = 0.5 * (a + b)
                q = period_at(m)
                if q is not None and q <= P:
                    a = m
                else:
                    b = m
            doublings.append(0.5 * (a + b))
            P *= 2
            a = b
    return CascadeScan(lambda_values=lams, attractor_samples=rec, periods=periods,
                       doubling_lambdas=doublings, delta_estimates=_deltas(doublings))


# ---------------------------------------------------------------------------
# Linear stability of the scheme
# ---------------------------------------------------------------------------


def stability_table(z_min: float = -3.0, z_max: float = 1.0, n: int = 81):
    """``(z, R(z))`` on a real grid."""
    z = np.linspace(z_min, z_max, n)
    return z, stability_R(z)


def stability_boundary(n: int = 360) -> np.ndarray:
    """Complex points on ``|R(z)| = 1``: both branches of ``R(z) = e^{i theta}``."""
    theta = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    root = np.sqrt(2 * np.exp(1j * theta) - 1)
    return np.concatenate([-1 + root, -1 - root])

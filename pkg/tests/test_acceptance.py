"""
Acceptance criteria, one check each, at the stated tolerances.

Every check prints a single PASS/FAIL line. Run the whole set with
``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction as Q

import numpy as np
import pytest

from heuncap.analysis import bifurcation_scan, critical_point_of_g, find_sink_orbit, positive_root_of_g
from heuncap.cli import main as cli_main
from heuncap.dynamics import (
    G_COEFFS,
    VectorFieldParams,
    contraction_bound_check,
    fd_jacobian_at_origin,
    heun_step,
    restricted_map_poly,
    schwarzian_g,
    stability_R,
)
from heuncap.engine import (
    SINK_POINTS,
    AbsorptionMode,
    EngineConfig,
    run_sink_invariance,
    run_trajectory_proof,
    sample_box,
    shadow_check,
    tiny_box,
    trajectory_box,
)
from heuncap.interval import add_lohi, div_lohi, mul_lohi, powi_lohi, sub_lohi

SEED = 20240531
FAITHFUL = EngineConfig(absorption_mode=AbsorptionMode.PAPER_FAITHFUL)


def c01_stability_values():
    a, b = stability_R(-0.2), stability_R(-3.0)
    return a == 0.82 and b == 2.5, f"R(-0.2)={a!r}, R(-3.0)={b!r}"


def c02_restricted_map_identity():
    rng = np.random.default_rng(SEED)
    x = rng.uniform(0.0, 8.32, 10_000)
    heun = heun_step(np.zeros_like(x), x)[1]
    c = G_COEFFS
    quartic = c[1] * x + c[2] * x**2 + c[3] * x**3 + c[4] * x**4
    ulps = np.abs(heun - quartic) / np.spacing(np.abs(quartic))
    bad = int(np.sum(ulps > 4))
    worst = float(np.max(ulps))
    return bad == 0, f"{bad} of 10000 samples beyond 4 ulp (worst {worst:.3g} ulp)"


def c03_positive_root():
    r = positive_root_of_g()
    return abs(r - 8.31177) <= 1e-4, f"r* = {r!r}"


def c04_critical_point():
    c = critical_point_of_g()
    return abs(c - 4.729976) <= 1e-5, f"critical point = {c!r}"


def c05_sink_orbit():
    orbit = find_sink_orbit()
    pts = np.array(orbit.points)
    listed = np.array(SINK_POINTS)
    # align the cycle to the listed first point, keep the image order
    k = int(np.argmin(np.abs(pts - listed[0])))
    pts = np.roll(pts, -k)
    err = float(np.max(np.abs(pts - listed)))
    stable = abs(orbit.multiplier) < 1
    return err <= 1e-9 and stable, (
        f"max |p_i - listed_i| = {err:.3e}, |multiplier| = {abs(orbit.multiplier):.4f}")


def c06_contraction_bound():
    rng = np.random.default_rng(SEED)
    x1 = rng.uniform(0.0, 1.0, 100_000)
    x2 = rng.uniform(0.0, 8.5, 100_000)
    bad = int(np.sum(~contraction_bound_check((x1, x2))))
    return bad == 0, f"{bad} violations in 100000 points"


def c07_run1():
    results = run_sink_invariance(FAITHFUL)
    ok = all(r.success and r.steps <= 250 for r in results)
    return ok, ", ".join(f"{r.label}: {'ok' if r.success else 'fail'} in {r.steps}" for r in results)


def c08_run2():
    t0 = time.perf_counter()
    r = run_trajectory_proof(FAITHFUL, threads=1)
    dt = time.perf_counter() - t0
    ok = r.success and r.steps <= 250 and 1e3 <= r.peak_active <= 1e5 and dt <= 180
    return ok, f"success={r.success}, steps={r.steps}, peak={r.peak_active}, {dt:.1f}s"


def c09_tiny_box_rigor():
    cfg = EngineConfig(absorption_mode=AbsorptionMode.STRICT_CONTAINMENT, snap_enabled=False)
    r = run_trajectory_proof(cfg, tiny_box())
    ok = r.success and all(s.snapped == 0 for s in r.history)
    return ok, f"success={r.success}, steps={r.steps}, snaps={[s.snapped for s in r.history]}"


def c10_shadowing():
    b0 = trajectory_box()
    pts = sample_box(b0, 1000, SEED)
    runs = [
        ("paper_faithful", FAITHFUL.replace(snap_enabled=False)),
        # the containment cloud explodes; follow orbits for as long as it lives
        ("strict_containment", EngineConfig(snap_enabled=False, max_boxes=200_000)),
    ]
    parts, total = [], 0
    for name, cfg in runs:
        rep = shadow_check(b0, cfg, pts)
        total += rep.violations
        parts.append(f"{name}: {rep.violations} violations over {rep.result.steps} steps")
    return total == 0, "; ".join(parts)


def _isotonic_violations(op, rng, n):
    def rand_iv(scale):
        a, b = rng.uniform(-scale, scale, (2, n))
        return np.minimum(a, b), np.maximum(a, b)

    alo, ahi = rand_iv(100.0)
    x = alo + rng.random(n) * (ahi - alo)
    if op == "div":
        mag = rng.uniform(0.01, 100.0, (2, n))
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        blo, bhi = np.sort(mag, axis=0) * 1.0
        blo, bhi = np.where(sign > 0, blo, -bhi), np.where(sign > 0, bhi, -blo)
    else:
        blo, bhi = rand_iv(100.0)
    y = blo + rng.random(n) * (bhi - blo)
    x, y = np.clip(x, alo, ahi), np.clip(y, blo, bhi)
    if op.startswith("pow"):
        k = int(op[-1])
        lo, hi = powi_lohi(alo, ahi, k)
        exact = [Q(a) ** k for a in x]
    else:
        fn = {"add": add_lohi, "sub": sub_lohi, "mul": mul_lohi, "div": div_lohi}[op]
        lo, hi = fn(alo, ahi, blo, bhi)
        f = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b,
             "mul": lambda a, b: a * b, "div": lambda a, b: a / b}[op]
        exact = [f(Q(a), Q(b)) for a, b in zip(x, y)]
    return sum(1 for l, v, h in zip(lo, exact, hi) if not Q(l) <= v <= Q(h))


def c11_isotonicity():
    rng = np.random.default_rng(SEED)
    ops = ["add", "sub", "mul", "div", "pow2", "pow3", "pow4"]
    counts = {op: _isotonic_violations(op, rng, 100_000) for op in ops}
    return sum(counts.values()) == 0, ", ".join(f"{k}:{v}" for k, v in counts.items())


def c12_eigenvalues():
    ev = np.sort(np.linalg.eigvals(fd_jacobian_at_origin()).real)
    ok = abs(ev[0] - 0.82) <= 1e-6 and abs(ev[1] - 2.5) <= 1e-6
    return ok, f"eigenvalues = ({ev[0]:.9f}, {ev[1]:.9f})"


def c13_cascade():
    t0 = time.perf_counter()
    scan = bifurcation_scan(10.0, 300.0, 29001)
    dt = time.perf_counter() - t0
    i30 = int(np.argmin(np.abs(scan.lambda_values - 30.0)))
    p30 = scan.periods[i30]
    d = scan.delta_estimates
    ok = (len(scan.doubling_lambdas) >= 4 and bool(d) and 4.0 <= d[-1] <= 5.4
          and p30 == 4 and dt <= 120)
    last = f"{d[-1]:.4f}" if d else "none"
    return ok, (f"{len(scan.doubling_lambdas)} doublings, final delta {last}, "
                f"period at 30 = {p30}, {dt:.1f}s")


def c14_schwarzian():
    rng = np.random.default_rng(SEED)
    parts, bad = [], 0
    for lam in (15.0, 30.0, 60.0):
        p = VectorFieldParams(lambda_stiff=lam)
        r = positive_root_of_g(p)
        x = rng.uniform(0.0, r, 10_000)
        x = x[(x > 0) & (x < r)]
        d1 = restricted_map_poly(p).deriv(1)(x)
        x = x[np.abs(d1) > 1e-6]
        s = schwarzian_g(x, p)
        n = int(np.sum(~(s < 0)))
        bad += n
        parts.append(f"lambda={lam:g}: {n} of {len(x)}")
    return bad == 0, "; ".join(parts)


def c15_determinism(tmp_dir):
    from pathlib import Path

    outs = []
    for t in ("1", "8"):
        d = Path(tmp_dir) / f"t{t}"
        code = cli_main(["prove", "--threads", t, "--out", str(d)])
        outs.append((code, (d / "proof_history.csv").read_bytes()))
    same = outs[0][1] == outs[1][1]
    return same and outs[0][0] == 0 == outs[1][0], f"byte-identical={same}, exit codes {outs[0][0]}/{outs[1][0]}"


CRITERIA = [
    (1, "stability function values", c01_stability_values),
    (2, "restricted map identity within 4 ulp", c02_restricted_map_identity),
    (3, "positive root of g", c03_positive_root),
    (4, "critical point of g", c04_critical_point),
    (5, "sink orbit matches listed points", c05_sink_orbit),
    (6, "x1 contraction bound", c06_contraction_bound),
    (7, "run 1 sink neighbourhoods", c07_run1),
    (8, "run 2 trajectory box", c08_run2),
    (9, "tiny box, strict, no snap", c09_tiny_box_rigor),
    (10, "enclosure shadowing", c10_shadowing),
    (11, "inclusion isotonicity", c11_isotonicity),
    (12, "eigenvalues at the origin", c12_eigenvalues),
    (13, "period-doubling cascade", c13_cascade),
    (14, "negative Schwarzian", c14_schwarzian),
    (15, "thread-count determinism", c15_determinism),
]


def _run(num, name, fn, tmp_dir=None):
    ok, detail = fn(tmp_dir) if fn is c15_determinism else fn()
    return ok, f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail}"


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(num, name, fn, tmp_path, capsys):
    ok, line = _run(num, name, fn, tmp_path)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    import tempfile

    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for num, name, fn in CRITERIA:
            ok, line = _run(num, name, fn, tmp)
            print(line, flush=True)
            failed += not ok
    sys.exit(1 if failed else 0)

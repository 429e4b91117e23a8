# The continuous system sends everything to the origin. Heun's method with
# h = 0.1 does not: on the x2-axis the step is a quartic map with a
# period-4 attractor.
import numpy as np

from heuncap import critical_point_of_g, find_sink_orbit, positive_root_of_g
from heuncap.analysis import cobweb_data, phase_trajectory
from heuncap.dynamics import jacobian_eigs_at_origin

z1, z2 = jacobian_eigs_at_origin()
print(f"DF(0) eigenvalues: {z1}, {z2}")  # 2.5 > 1, so the origin repels along x2

crit = critical_point_of_g()
root = positive_root_of_g()
print(f"g folds [0, {root:.5f}] with its maximum at {crit:.6f}")

orbit = find_sink_orbit()
print("period-4 cycle:", ", ".join(f"{p:.12f}" for p in orbit.points))
print(f"multiplier {orbit.multiplier:.4f}")

# the orbit of (1,1) falls onto the x2-axis and then onto the cycle
tr = phase_trajectory((1.0, 1.0), 60)
for k in (0, 5, 10, 20, 56, 57, 58, 59):
    x1, x2 = tr.points[k]
    print(f"F^{k:<2d}(1,1) = ({x1:.3e}, {x2:.6f})")

segs = cobweb_data(crit, 40)
tail = np.unique(np.round(segs[-8:, 1, 1], 6))
print("cobweb from the critical point ends on", tail)

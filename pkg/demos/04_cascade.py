# Increasing the stiffness drives the axis map through period doubling.
from heuncap.analysis import bifurcation_scan

scan = bifurcation_scan(10.0, 300.0, 29001)
for k, lam in enumerate(scan.doubling_lambdas):
    print(f"period {2 ** k:>2d} -> {2 ** (k + 1):<2d} at lambda = {lam:.8f}")
for k, d in enumerate(scan.delta_estimates, 1):
    print(f"delta_{k} = {d:.4f}")
print("(Feigenbaum: 4.6692...)")

chaotic = [lam for lam, p in zip(scan.lambda_values, scan.periods) if p is None and lam > 30.4]
print(f"first lambda with no detected cycle past the cascade: {chaotic[0]:.2f}")

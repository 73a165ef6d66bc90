"""
Convergence of the phase-space averages toward their large-p constants.

For V = exp(-|y|^2) in three dimensions

    p^-2 Xi_p -> 1 / (24 sqrt(pi)),    p^-1 Sigma_p -> 4.156e-3,

and for the model tail V_theta the averages grow like p^(theta+1) and
p^(theta-1) with constants built from L(3, theta, 1) and K(3, theta, 1).
"""
import numpy as np

from pairspec import (PhysParams, gaussian_potential, model_potential, xi_p, sigma_p,
                      asym_leading)

V = gaussian_potential()
xi_lim = asym_leading("xi_std", V=V).value
sg_lim = asym_leading("sigma_std", V=V).value
print("Gaussian well, equal masses, M = 1")
print(f"{'p':>8} {'Xi/(p^2 c)':>12} {'Sigma/(p c)':>12}")
for p in 10.0 ** np.arange(1, 6):
    pr = PhysParams(0.5, 0.5, p)
    print(f"{p:8.0e} {xi_p(V, pr).xi_value / p ** 2 / xi_lim:12.6f} "
          f"{sigma_p(V, pr).sigma_value / p / sg_lim:12.6f}")

print("\nModel tails, ratios to the leading weak-class constants")
for theta, kind in ((1.2, "xi_weak"), (2.2, "sigma_weak")):
    W = model_potential(theta, 1.0)
    for p in (1e3, 1e4, 1e5):
        pr = PhysParams(0.5, 0.5, p)
        c = asym_leading(kind, theta=theta, params=pr)
        val = xi_p(W, pr).xi_value if kind == "xi_weak" else sigma_p(W, pr).sigma_value
        print(f"theta={theta}  p={p:8.0e}  ratio={val / p ** c.power / c.value:.5f}")

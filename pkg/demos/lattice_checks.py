"""
Lattice spectrum of the pair operator in one dimension and the checks built
on it: Birman-Schwinger counting, the Cwikel singular value bound, the
Aizenman-Lieb identity and the coherent-state lower bound.
"""
import numpy as np

from pairspec import (PhysParams, GridSpec, smooth_well, build_operator, negative_spectrum,
                      count_below, bs_singular_values, product_symbol, q_average,
                      aizenman_lieb, berezin_sandwich, sigma_p)

V = smooth_well(a=20.0, d=1)
for p in (8.0, 32.0):
    pr = PhysParams(0.5, 0.5, p)
    grid = GridSpec(1, 512, 1.5 * p)
    spec = negative_spectrum(build_operator(V, pr, grid))
    res = berezin_sandwich(V, pr, grid, r=0.1, spectrum=spec)
    print(f"p={p:4.0f}: N={spec.count:3d}  S_p={spec.moment:.5f}  Sigma_p={sigma_p(V, pr).sigma_value:.5f}"
          f"  lower={res.lower:.5f}  kappa={res.kappa:.4f}")

pr = PhysParams(1.0, 3.0, 2.0)
grid = GridSpec(1, 256, 24.0)
V = smooth_well(a=10.0, d=1)
op = build_operator(V, pr, grid, regularization=1e-6)
spec = negative_spectrum(op)
s = bs_singular_values(V, pr, grid, shift=spec.eps_count)
print(f"\nunequal masses: {spec.count} eigenvalues below zero, "
      f"{int(np.sum(s > 1))} singular values above one")

q = product_symbol(V, pr, grid, shift=spec.eps_count)
n = np.arange(1, 11)
bound = 5 * q_average(q, q, 2 * np.pi * n)
for k, sv, b in zip(n, s, bound):
    print(f"  s_{k:<2d} = {sv:8.4f}   5<q>(2 pi n) = {b:8.4f}")

S = aizenman_lieb(lambda u: count_below(op, u), horizon=spec.moment)
print(f"\nintegral of the counting function {S:.12f}, eigenvalue moment {spec.moment:.12f}")

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and repeated in the terminal summary.  Failing
criteria fail their test; nothing here is marked as an expected failure.
"""
import math

import numpy as np
import pytest
from scipy import special

from pairspec import (PhysParams, GridSpec, build_operator, negative_spectrum, count_below,
                      bs_singular_values, product_symbol, q_average, berezin_sandwich,
                      aizenman_lieb, lambda_closed, lambda_mc, xi_p, sigma_p, special_L,
                      special_K, special_K_nested, asym_leading, gaussian_potential,
                      smooth_well, model_potential, ball_volume, symbol_h, symbol_g,
                      smooth_symbol, kinetic_t, momentum_window_check, coherent_bump,
                      scale_to_pair_frame)
from pairspec.cli import main
from pairspec.spectral import symbol_theta, potential_theta, coherent_kappa

from conftest import ACCEPTANCE_LINES

OMEGA3 = ball_volume(3)


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _check(n, parts):
    """``parts`` is a list of (name, ok, detail); the criterion passes if all do."""
    ok = all(p[1] for p in parts)
    detail = "; ".join(f"{name} {'ok' if good else 'FAILED'} ({text})"
                       for name, good, text in parts)
    report(n, ok, detail)
    assert ok, detail


def test_c01_closed_form_density():
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(20):
        d = int(rng.choice([3, 4, 5]))
        mt = rng.uniform(0, 0.49)
        tau = 1 - rng.uniform(0, 1)  # (0, 1]
        W = 10 * (1 - rng.uniform(0, 1))  # (0, 10]
        pr = PhysParams.from_reduced(mt, tau)
        est, err = lambda_mc(W, pr, d, 10 ** 6, seed=1000 + k)
        z = abs(est - lambda_closed(W, pr, d)) / err
        worst = max(worst, z)
    _check(1, [("MC agreement", worst <= 3, f"max |z| = {worst:.2f} over 20 tuples")])


def test_c02_standard_asymptotics():
    V = gaussian_potential()
    lim = 1 / (24 * math.sqrt(math.pi))
    r = [xi_p(V, PhysParams(0.5, 0.5, p)).xi_value / p ** 2 / lim for p in (1e2, 1e3, 1e4)]
    err = abs(r[-1] - 1)
    mono = abs(r[0] - 1) > abs(r[1] - 1) > abs(r[2] - 1)
    _check(2, [("p=1e4", err <= 0.02, f"rel err {err:.2e}"),
               ("monotone", mono, "ratios " + ", ".join(f"{x:.5f}" for x in r))])


def test_c03_moment_asymptotics():
    p = 1e4
    val = sigma_p(gaussian_potential(), PhysParams(0.5, 0.5, p)).sigma_value / p
    err = abs(val / 4.156e-3 - 1)
    _check(3, [("p=1e4", err <= 0.02, f"p^-1 Sigma_p = {val:.5e}, rel err {err:.2e}")])


def test_c04_weak_class_asymptotics():
    p = 1e5
    pr = PhysParams(0.5, 0.5, p)
    th = 1.2
    ref_xi = 2 ** th * th * OMEGA3 ** 2 * (4 * np.pi) ** -3 * special_L(3, th, 1.0)
    got_xi = xi_p(model_potential(th, 1.0), pr).xi_value / p ** (th + 1)
    e_xi = abs(got_xi / ref_xi - 1)
    th = 2.2
    printed = 2 ** (th - 1.5) * th * OMEGA3 ** 2 * (4 * np.pi) ** -3 * special_K(3, th, 1.0)
    got_sg = sigma_p(model_potential(th, 1.0), pr).sigma_value / p ** (th - 1)
    e_sg = abs(got_sg / printed - 1)
    derived = asym_leading("sigma_weak", theta=th, params=pr).value
    info = (f"Sigma/p^(theta-1) = {got_sg:.5e} vs the 2^(theta-3/2) constant {printed:.5e}; "
            f"the numerics approach 2^(theta-1) instead (ratio {got_sg / derived:.4f} to the "
            f"derived constant, correction decays like p^-0.2)")
    _check(4, [("Xi theta=1.2", e_xi <= 0.05, f"rel err {e_xi:.3e}"),
               ("Sigma theta=2.2", e_sg <= 0.05, f"rel err {e_sg:.3e}; {info}")])


def test_c05_special_constants():
    eL = abs(special_L(3, 1.25, 1.0) / (special.gamma(0.25) ** 2 / special.gamma(0.5)) - 1)
    eK = abs(special_K(3, 2.2, 1.0) / (special.beta(0.3, 0.2) / 2.2) - 1)
    eN = max(abs(special_K(3, 2.2, mu) / special_K_nested(3, 2.2, mu) - 1)
             for mu in (1.0, 0.6, 0.25))
    _check(5, [("L beta", eL <= 1e-6, f"{eL:.1e}"), ("K beta", eK <= 1e-6, f"{eK:.1e}"),
               ("K routes", eN <= 1e-6, f"{eN:.1e}")])


# (d, n, box half-width / p, masses, p, potential)
BS_INSTANCES = [
    (1, 128, 12.0, (0.5, 0.5), 2.0, gaussian_potential(a=3.0, d=1)),
    (1, 256, 12.0, (1.0, 3.0), 2.0, gaussian_potential(a=8.0, d=1)),
    (1, 256, 1.5, (0.5, 0.5), 4.0, smooth_well(a=10.0, d=1)),
    (1, 512, 1.5, (0.2, 1.0), 2.0, smooth_well(a=30.0, d=1)),
    (1, 1024, 6.0, (0.5, 0.5), 8.0, gaussian_potential(a=20.0, d=1)),
    (1, 64, 12.0, (0.5, 0.5), 1.0, gaussian_potential(a=0.5, d=1)),
    (2, 32, 6.0, (0.5, 0.5), 2.0, gaussian_potential(a=3.0, d=2)),
    (2, 32, 6.0, (1.0, 3.0), 2.0, gaussian_potential(a=10.0, d=2)),
    (2, 32, 1.5, (0.5, 0.5), 4.0, smooth_well(a=8.0, d=2)),
    (2, 32, 1.5, (0.3, 0.7), 2.0, smooth_well(a=20.0, d=2)),
    (2, 32, 8.0, (0.5, 0.5), 1.0, gaussian_potential(a=6.0, d=2)),
    (2, 64, 6.0, (0.5, 0.5), 1.0, gaussian_potential(a=2.0, d=2)),
]


@pytest.fixture(scope="module")
def bs_data():
    out = []
    for d, n, box, (mp, mm), p, V in BS_INSTANCES:
        pr = PhysParams(mp, mm, p)
        g = GridSpec(d, n, box * p)
        spec = negative_spectrum(build_operator(V, pr, g, regularization=1e-6))
        s = bs_singular_values(V, pr, g, shift=spec.eps_count)
        q = product_symbol(V, pr, g, shift=spec.eps_count)
        out.append((d, n, spec, s, q))
    return out


def test_c06_birman_schwinger(bs_data):
    bad = [(d, n, sp.count, int(np.sum(s > 1))) for d, n, sp, s, _ in bs_data
           if sp.count != int(np.sum(s > 1))]
    counts = [sp.count for _, _, sp, _, _ in bs_data]
    _check(6, [(f"{len(bs_data)} instances", not bad,
                f"counts {counts}, mismatches {bad}")])


def test_c07_cwikel(bs_data):
    viol, worst, total = 0, 0.0, 0
    for d, n, _, s, q in bs_data:
        k = np.arange(1, s.size + 1)
        bound = 5 * q_average(q, q, (2 * np.pi) ** d * k)
        viol += int(np.sum(s > bound))
        worst = max(worst, float(np.max(s / bound)))
        total += s.size
    _check(7, [("singular values", viol == 0,
                f"{viol} violations among {total}; max s_n/bound = {worst:.3f}")])


def test_c08_berezin_sandwich():
    r = 0.1
    parts = []
    # d = 1: dense oracle at n and 2n
    for p in (8.0, 32.0):
        V = smooth_well(a=20.0, d=1)
        pr = PhysParams(0.5, 0.5, p)
        s1 = negative_spectrum(build_operator(V, pr, GridSpec(1, 512, 1.5 * p)))
        g2 = GridSpec(1, 1024, 1.5 * p)
        s2 = negative_spectrum(build_operator(V, pr, g2))
        res = berezin_sandwich(V, pr, g2, r, spectrum=s2)
        allow = 2 * abs(s2.moment - s1.moment)
        parts.append((f"d=1 p={p:g}", res.lower <= res.spectral + allow,
                      f"lower {res.lower:.4f} <= S_p {res.spectral:.4f} + {allow:.1e}"))
    # d = 3 on 64^3: the 48 most negative eigenvalues bound S_p from below
    p, k = 16.0, 48
    V = smooth_well(a=19.0, R=3.0, d=3)
    pr = PhysParams(0.5, 0.5, p)
    part = {}
    for n in (32, 64):
        g = GridSpec(3, n, 1.5 * 3.0 * p)
        part[n] = negative_spectrum(build_operator(V, pr, g), k_max=k, k_limit=k)
    thetas = {q: symbol_theta(PhysParams(0.5, 0.5, q), 3, r) for q in (4.0, 8.0, 16.0)}
    res = berezin_sandwich(V, pr, g, r, spectrum=part[64], theta_J=thetas[16.0],
                           quad_tol=1e-5)
    allow = 2 * abs(part[64].moment - part[32].moment)
    parts.append(("d=3 p=16 n=64^3", res.lower <= part[64].moment + allow,
                  f"lower {res.lower:.4f} <= partial S_p {part[64].moment:.4f} "
                  f"({part[64].count} eigenvalues, complete={part[64].complete}) + {allow:.1e}; "
                  f"kappa {res.kappa:.3f} < sup V_p {19.0 / p:.3f}"))
    # kappa exponent at fixed r
    f = coherent_bump(3)
    W = smooth_well(a=6.0, d=3)
    ps = np.array(sorted(thetas))
    kap = [coherent_kappa(f, thetas[q], potential_theta(scale_to_pair_frame(W, q), n=801))
           for q in ps]
    slope = np.polyfit(np.log(ps), np.log(kap), 1)[0]
    big = np.array([1024.0, 4096.0])
    tj1 = [symbol_theta(PhysParams(0.5, 0.5, q), 1, r, pts_per_r=32) for q in big]
    tail = np.log(np.sqrt(tj1[1] / tj1[0]) * 4.0 ** -1.5) / np.log(4.0)
    parts.append(("kappa exponent", abs(slope + 1.5) <= 0.1,
                  f"fit {slope:.3f} over p=4,8,16 (theta_J = "
                  + ", ".join(f"{thetas[q]:.2f}" for q in ps)
                  + f"); theta_J still grows at these p, theta_W scales as p^-3 exactly; "
                  f"d=1 theta_J saturates ({tj1[0]:.2f}, {tj1[1]:.2f} at p=1024, 4096), "
                  f"giving exponent {tail:.3f} there"))
    _check(8, parts)


def test_c09_moment_trend():
    V = smooth_well(a=6.0, d=3)
    ratios, methods = [], []
    for p in (8.0, 16.0, 32.0):
        pr = PhysParams(0.5, 0.5, p)
        g = GridSpec(3, int(2 * p), 1.5 * p)
        spec = negative_spectrum(build_operator(V, pr, g))
        ratios.append(spec.moment / sigma_p(V, pr).sigma_value)
        methods.append(spec.method)
    pr = PhysParams(0.5, 0.5, 8.0)
    fine = negative_spectrum(build_operator(V, pr, GridSpec(3, 32, 12.0))).moment
    resid = abs(fine / sigma_p(V, pr).sigma_value - ratios[0])
    in_range = all(0.5 <= x <= 1.5 for x in ratios)
    dist = [abs(x - 1) for x in ratios]
    mono = dist[0] > dist[1] > dist[2]
    txt = ", ".join(f"{x:.4f}" for x in ratios)
    _check(9, [("range", in_range, f"S_p/Sigma_p = {txt} at p = 8, 16, 32"),
               ("monotone", mono, f"distances to 1 {', '.join(f'{x:.4f}' for x in dist)}; "
                                  f"grid residual at p=8 (n=2p vs 4p) {resid:.1e}")])


def _fd_derivatives(xi, pr, h):
    d = xi.shape[-1]
    g = np.zeros(xi.shape)
    H = np.zeros(xi.shape + (d,))
    f0 = symbol_h(xi, pr)
    for k in range(d):
        ek = np.zeros(d)
        ek[k] = 1
        fp = symbol_h(xi + h[:, None] * ek, pr)
        fm = symbol_h(xi - h[:, None] * ek, pr)
        g[:, k] = (fp - fm) / (2 * h)
        H[:, k, k] = (fp - 2 * f0 + fm) / h ** 2
        for l in range(k + 1, d):
            el = np.zeros(d)
            el[l] = 1
            v = (symbol_h(xi + h[:, None] * (ek + el), pr) - symbol_h(xi + h[:, None] * (ek - el), pr)
                 - symbol_h(xi - h[:, None] * (ek - el), pr)
                 + symbol_h(xi - h[:, None] * (ek + el), pr)) / (4 * h ** 2)
            H[:, k, l] = H[:, l, k] = v
    return g, H


def test_c10_symbol_properties():
    rng = np.random.default_rng(1010)
    n = 1000
    parts = []
    pars = [PhysParams.from_reduced(rng.uniform(-0.45, 0.45), rng.uniform(0.05, 1.0))
            for _ in range(n)]
    xi = rng.uniform(-1.5, 1.5, (n, 3))
    # derivative bounds
    bad_g = bad_h = 0
    for pr, x in zip(pars, xi):
        tp, tm = kinetic_t(1, x, pr), kinetic_t(-1, x, pr)
        h = np.array([1e-3 * min(tp, tm)])
        g, H = _fd_derivatives(x[None], pr, h)
        bad_g += int(np.any(np.abs(g) > 2 + 1e-6))
        bad_h += int(np.any(np.abs(H) > (1 / tp + 1 / tm) * (1 + 1e-4)))
    parts.append(("gradient", bad_g == 0, f"{bad_g}/{n} violations"))
    parts.append(("Hessian", bad_h == 0, f"{bad_h}/{n} violations"))
    # convexity of H and G
    y = rng.uniform(-1.5, 1.5, (n, 3))
    lam = rng.uniform(0, 1, n)
    delta = rng.uniform(0.01, 0.49, n)
    bad_c = 0
    for pr, a, b, t, dl in zip(pars, xi, y, lam, delta):
        m = t * a + (1 - t) * b
        bad_c += int(symbol_h(m, pr) > t * symbol_h(a, pr) + (1 - t) * symbol_h(b, pr) + 1e-12)
        bad_c += int(symbol_g(m, pr, dl) > t * symbol_g(a, pr, dl)
                     + (1 - t) * symbol_g(b, pr, dl) + 1e-12)
    parts.append(("convexity", bad_c == 0, f"{bad_c}/{2 * n} violations"))
    # H <= H_sigma inside the smoothing balls
    bad_s = 0
    for i in range(n):
        pr = pars[i]
        r = 0.45 * min(pr.mu_plus, pr.mu_minus)
        s = 1 if i % 2 else -1
        u = rng.normal(size=3)
        x = pr.center(s, 3) + r * rng.uniform() ** (1 / 3) * u / np.linalg.norm(u)
        hs = smooth_symbol(x[None], r, pr, quad_tol=1e-6)[0]
        bad_s += int(hs < symbol_h(x, pr) - 1e-12)
    parts.append(("H <= H_sigma", bad_s == 0, f"{bad_s}/{n} violations"))
    # G_sigma <= H near the dilated centers and elsewhere
    bad_G, bad_eq, n_eq = 0, 0, 0
    for i in range(n):
        pr = pars[i] if i % 4 else PhysParams(0.5, 0.5, 1.0 / pars[i].tau)
        dl = delta[i]
        r = 0.9 * min(pr.mu_plus, pr.mu_minus)
        s = 1 if i % 2 else -1
        x = pr.center(s, 3) / (1 - dl) + rng.uniform(-r, r, 3)
        gs = smooth_symbol(x[None], r, pr, "G", delta=dl, quad_tol=1e-6)[0]
        viol = gs > symbol_h(x, pr) + 1e-12
        bad_G += int(viol)
        if pr.mu_plus == pr.mu_minus:
            n_eq += 1
            bad_eq += int(viol)
    parts.append(("G_sigma <= H", bad_G == 0,
                  f"{bad_G}/{n} violations, {bad_G - bad_eq} of them with unequal masses; "
                  f"equal-mass subset {bad_eq}/{n_eq}"))
    # momentum window inequality
    bad_w, inside = 0, 0
    for _ in range(n):
        p = 10 ** rng.uniform(0, 3)
        pr = PhysParams(0.5, 0.5, p)
        nu = rng.uniform(pr.M, p)
        x = np.concatenate([[rng.uniform(-6, 6) * p], rng.normal(size=2) * math.sqrt(nu * p)])
        chk = momentum_window_check(x, nu, pr)
        inside += int(chk.in_window)
        bad_w += int(not chk.inequality_holds)
    parts.append(("momentum window", bad_w == 0, f"{bad_w} violations, {inside}/{n} in window"))
    _check(10, parts)


def test_c11_aizenman_lieb():
    rng = np.random.default_rng(11)
    levels = np.sort(rng.uniform(0, 5, 40))
    S = aizenman_lieb(lambda u: int(np.sum(levels > u)), horizon=0.5)
    e_stair = abs(S / levels.sum() - 1)
    V = gaussian_potential(a=6.0, d=1)
    pr = PhysParams(1.0, 3.0, 2.0)
    op = build_operator(V, pr, GridSpec(1, 128, 24.0))
    spec = negative_spectrum(op, eps_count=0.0)
    S_al = aizenman_lieb(lambda u: count_below(op, u), horizon=spec.moment)
    e_grid = abs(S_al - spec.moment)
    big = negative_spectrum(build_operator(gaussian_potential(a=3.0, d=2), PhysParams(0.5, 0.5, 2.0),
                                           GridSpec(2, 128, 12.0)), tol=1e-12)
    _check(11, [("staircase", e_stair <= 1e-13, f"rel err {e_stair:.1e}"),
                ("grid", e_grid <= 1e-9 * spec.moment,
                 f"|AL - S_p| = {e_grid:.1e} with S_p = {spec.moment:.6f} ({spec.count} levels)"),
                ("lanczos residuals", bool(np.max(big.residuals) < 1e-8),
                 f"max {np.max(big.residuals):.1e}")])


def test_c12_determinism(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        code = main(["sweep", "--d", "3", "--p", "2", "--p", "4", "--grid-n", "32",
                     "--potential", "gaussian:a=2", "--seed", "12", "--out", str(path)])
        outs.append((code, path.read_bytes()))
    same = outs[0][1] == outs[1][1]
    _check(12, [("csv bytes", same and outs[0][0] == 0,
                 f"{len(outs[0][1])} bytes, identical {same}")])

"""
Phase-space densities and averages for the pair symbol.

For a pair-frame potential value ``W >= 0`` the density

    Lambda(W) = (2 pi)^(-d) |{xi : H_p(xi) < W}|

has a closed form because the sub-level set is an ellipsoid of revolution.
Integrating it against a potential gives the phase-space volume ``Xi_p``
and the phase-space energy ``Sigma_p``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .potential import Potential, radial_integral, scale_to_pair_frame
from .symbol import PhysParams, ball_volume, symbol_h

__all__ = [
    "lambda_closed", "lambda_moment", "lambda_mc", "containment_violations",
    "comparable", "classify_region", "PhaseSpaceReport", "xi_p", "sigma_p",
    "phase_space", "nu_q", "nu_q_mc", "AsymptoticConstant", "asym_leading",
    "special_L", "special_L_closed", "special_K", "special_K_nested",
]


def lambda_closed(W, params, d=3):
    """Closed-form phase-space density ``Lambda(W)``.

    Parameters
    ----------
    W : array_like
        Potential values; negative entries are treated as 0.
    params : PhysParams
        Must satisfy ``tau <= 1``.
    d : int
        Dimension.

    Returns
    -------
    ndarray
        ``(2 pi)^-d`` times the volume of ``{H_p < W}``.

    Raises
    ------
    RegimeError
        If ``tau > 1``.
    """
    params.require_relativistic()
    W = np.maximum(np.asarray(W, dtype=float), 0.0)
    tau2 = params.tau ** 2
    ups = params.upsilon
    Q = W * W + 2 * W * ups
    num = (ball_volume(d) * W ** (d / 2) * (W + ups) * (W + 2 * ups) ** (d / 2)
           * (Q + tau2 * params.mu_hat) ** (d / 2))
    return num / ((4 * np.pi) ** d * (Q + tau2) ** ((d + 1) / 2))


def _sphere_b(W, params):
    """Squared radius of the ball that encloses ``{H_p < W}``."""
    A = W + params.upsilon
    return A * A / 2 - (params.mu_tilde ** 2 + 0.25) * params.tau ** 2 - 0.25


def _ball_samples(rng, n, d, radius):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (radius * rng.random(n) ** (1.0 / d))[:, None]


def lambda_mc(W, params, d=3, n_samples=10 ** 6, seed=0, batch=250_000):
    """Monte-Carlo estimate of ``Lambda(W)``.

    Points are drawn uniformly from the ball ``|zeta|^2 + (eta + mu_tilde)^2 < B``
    which contains the sub-level set.

    Returns
    -------
    estimate, stderr : float
    """
    if W <= 0:
        return 0.0, 0.0
    if n_samples < 10 ** 4:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)
    B = _sphere_b(W, params)
    R = np.sqrt(B)
    shift = np.zeros(d)
    shift[0] = -params.mu_tilde
    hits = 0
    left = n_samples
    while left:
        m = min(batch, left)
        xi = _ball_samples(rng, m, d, R) + shift
        hits += int(np.count_nonzero(symbol_h(xi, params) < W))
        left -= m
    frac = hits / n_samples
    vol = ball_volume(d) * R ** d / (2 * np.pi) ** d
    return vol * frac, vol * np.sqrt(frac * (1 - frac) / n_samples)


def containment_violations(W, params, d=3, n_samples=10 ** 5, seed=0, inflate=2.0):
    """Count sub-level hits outside the enclosing ball.

    Samples a ball ``inflate`` times larger than the enclosing one and
    returns ``(hits, violations)``.
    """
    rng = np.random.default_rng(seed)
    B = _sphere_b(W, params)
    xi = _ball_samples(rng, n_samples, d, inflate * np.sqrt(B))
    xi[:, 0] -= params.mu_tilde
    hit = symbol_h(xi, params) < W
    r2 = (xi[:, 0] + params.mu_tilde) ** 2 + np.sum(xi[:, 1:] ** 2, axis=1)
    return int(hit.sum()), int(np.count_nonzero(hit & (r2 >= B)))


def comparable(W, params, d=3):
    """Two-sided comparison function ``min(W^(d/2)/tau, W^((d-1)/2)) + W^d``."""
    W = np.maximum(np.asarray(W, dtype=float), 0.0)
    return np.minimum(W ** (d / 2) / params.tau, W ** ((d - 1) / 2)) + W ** d


def lambda_moment(W, params, d=3, rtol=1e-10):
    """``int_0^W Lambda(w) dw`` by quadrature in ``log w``."""
    W = np.atleast_1d(np.asarray(W, dtype=float))
    out = np.zeros_like(W)
    tau2 = params.tau ** 2
    f = lambda s: float(lambda_closed(np.exp(s), params, d)) * np.exp(s)
    for i, w in enumerate(W):
        if w <= 0:
            continue
        top = np.log(w)
        lo = top - 80.0
        cuts = [c for c in (np.log(tau2), 0.0) if lo < c < top]
        edges = [lo] + cuts + [top]
        out[i] = sum(integrate.quad(f, a, b, epsabs=0, epsrel=rtol, limit=200)[0]
                     for a, b in zip(edges[:-1], edges[1:]))
    return out


def classify_region(y, Vp, params):
    """Region label 1, 2 or 3 of points in the pair frame.

    ``1``: ``V_p <= tau^2``; ``2``: ``tau^2 < V_p <= 1``; ``3``: ``V_p > 1``.

    Parameters
    ----------
    y : array_like, shape (..., d)
        Points; if ``Vp`` is None, ``y`` is taken to hold values of ``V_p``.
    Vp : Potential or None
    params : PhysParams
    """
    params.require_relativistic()
    w = np.asarray(y, dtype=float) if Vp is None else Vp.at(y)
    return np.where(w <= params.tau ** 2, 1, np.where(w <= 1.0, 2, 3))


@dataclass
class PhaseSpaceReport:
    """Phase-space averages with error estimates.

    Attributes
    ----------
    xi_value, xi_error : float or None
    sigma_value, sigma_error : float or None
    region_breakdown : dict
        ``{'xi': {1: .., 2: .., 3: ..}, 'sigma': {...}}``.
    params : PhysParams
    diagnostics : dict
    """
    params: PhysParams
    xi_value: float = None
    xi_error: float = None
    sigma_value: float = None
    sigma_error: float = None
    region_breakdown: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _regions(pieces, Vp, params):
    out = {1: 0.0, 2: 0.0, 3: 0.0}
    for a, b, val in pieces:
        mid = np.sqrt(a * b) if np.isfinite(b) else a
        out[int(classify_region(float(Vp(mid)), None, params))] += val
    return out


def _pair_frame(V, params):
    if not isinstance(V, Potential):
        raise TypeError("V must be a Potential")
    params.require_relativistic()
    return scale_to_pair_frame(V, params.p)


def xi_p(V, params, quad_tol=1e-8):
    """Phase-space volume ``Xi_p = int Lambda(V_p(y)) dy``.

    Raises
    ------
    DivergenceError
        If the integral is infinite.
    """
    Vp = _pair_frame(V, params)
    d = V.d
    F = lambda w: lambda_closed(w, params, d)
    val, err, pieces = radial_integral(Vp, F, levels=(params.tau ** 2, 1.0),
                                       rtol=quad_tol)
    rep = PhaseSpaceReport(params, xi_value=val, xi_error=err)
    rep.region_breakdown["xi"] = _regions(pieces, Vp, params)
    rep.diagnostics["xi_panels"] = len(pieces)
    rep.diagnostics["truncation_radius"] = pieces[-1][1] if pieces else 0.0
    return rep


def sigma_p(V, params, quad_tol=1e-8):
    """Phase-space energy ``Sigma_p = int_0^inf Xi_p(V - s p) ds``.

    Evaluated as ``int Phi(V_p(y)) dy`` with ``Phi(W) = int_0^W Lambda``.
    """
    Vp = _pair_frame(V, params)
    d = V.d
    F = lambda w: lambda_moment(w, params, d, rtol=min(quad_tol, 1e-10) * 1e-2)
    val, err, pieces = radial_integral(Vp, F, levels=(params.tau ** 2, 1.0),
                                       rtol=quad_tol)
    rep = PhaseSpaceReport(params, sigma_value=val, sigma_error=err)
    rep.region_breakdown["sigma"] = _regions(pieces, Vp, params)
    rep.diagnostics["sigma_panels"] = len(pieces)
    return rep


def phase_space(V, params, quad_tol=1e-8):
    """Both ``Xi_p`` and ``Sigma_p`` in a single report."""
    a = xi_p(V, params, quad_tol)
    b = sigma_p(V, params, quad_tol)
    a.sigma_value, a.sigma_error = b.sigma_value, b.sigma_error
    a.region_breakdown.update(b.region_breakdown)
    a.diagnostics.update(b.diagnostics)
    return a


def nu_q(s, V, params, quad_tol=1e-8):
    """Phase-space measure of ``{sqrt(V_p(x) / H_p(xi)) > s}``, i.e. ``Xi_p(V / s^2)``."""
    if s <= 0:
        raise ValueError("s must be positive")
    return xi_p(V.scaled(s ** -2), params, quad_tol).xi_value


def nu_q_mc(s, V, params, n_samples=10 ** 6, seed=0, batch=200_000):
    """Monte-Carlo oracle for `nu_q` by sampling the product space.

    Returns
    -------
    estimate, stderr : float
    """
    d = V.d
    Vp = scale_to_pair_frame(V, params.p)
    Rx = Vp.tail.radius
    if Vp.tail.kind != "compact":
        raise ValueError("Monte-Carlo oracle needs a compactly supported potential")
    Wmax = Vp.sup / s ** 2
    Rxi = np.sqrt(_sphere_b(Wmax, params))
    rng = np.random.default_rng(seed)
    hits, left = 0, n_samples
    while left:
        m = min(batch, left)
        x = _ball_samples(rng, m, d, Rx)
        xi = _ball_samples(rng, m, d, Rxi)
        xi[:, 0] -= params.mu_tilde
        hits += int(np.count_nonzero(symbol_h(xi, params) * s ** 2 < Vp.at(x)))
        left -= m
    frac = hits / n_samples
    vol = (ball_volume(d) ** 2 * (Rx * Rxi) ** d) / (2 * np.pi) ** d
    return vol * frac, vol * np.sqrt(frac * (1 - frac) / n_samples)


# -- asymptotic constants ------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticConstant:
    """Leading coefficient ``value`` with ``quantity ~ value * p**power``."""
    regime: str
    value: float
    power: float
    inputs: dict


def _alg_halves(f0, a0, f1, a1, rtol):
    """``int_0^1 f0(t) t^a0 dt + int_0^1 f1(s) s^a1 ds`` with endpoint weights."""
    opts = dict(epsabs=0, epsrel=rtol, limit=200)
    I0 = integrate.quad(f0, 0, 1, weight="alg", wvar=(a0, 0), **opts)[0]
    I1 = integrate.quad(f1, 0, 1, weight="alg", wvar=(a1, 0), **opts)[0]
    return I0 + I1


def special_L(d, theta, mu_hat, rtol=1e-12):
    """``int_0^inf (t + mu_hat)^(d/2) t^(d/2 - theta - 1) (t + 1)^(-(d+1)/2) dt``.

    Requires ``(d-1)/2 < theta < d/2`` and ``0 < mu_hat <= 1``.
    """
    if not (d - 1) / 2 < theta < d / 2:
        raise ValueError("need (d-1)/2 < theta < d/2")
    if not 0 < mu_hat <= 1:
        raise ValueError("need 0 < mu_hat <= 1")
    h, m = d / 2, (d + 1) / 2
    f0 = lambda t: (t + mu_hat) ** h * (t + 1) ** -m
    f1 = lambda s: (1 + mu_hat * s) ** h * (1 + s) ** -m
    return _alg_halves(f0, h - theta - 1, f1, theta - m, rtol)


def special_L_closed(d, theta, mu_hat):
    """Hypergeometric closed form of `special_L` (cross-check)."""
    a = d / 2 - theta
    return (mu_hat ** (d - theta) * special.beta(a, theta - (d - 1) / 2)
            * special.hyp2f1(a, (d + 1) / 2, 0.5, 1 - mu_hat))


def special_K(d, theta, mu_hat, rtol=1e-12):
    """``theta^-1 int_0^inf u^(d/2 - theta) (u + mu_hat)^(d/2) (u + 1)^(-(d+1)/2) du``.

    Requires ``(d+1)/2 < theta < d/2 + 1`` and ``0 < mu_hat <= 1``.
    """
    if not (d + 1) / 2 < theta < d / 2 + 1:
        raise ValueError("need (d+1)/2 < theta < d/2 + 1")
    if not 0 < mu_hat <= 1:
        raise ValueError("need 0 < mu_hat <= 1")
    h, m = d / 2, (d + 1) / 2
    f0 = lambda u: (u + mu_hat) ** h * (u + 1) ** -m
    f1 = lambda s: (1 + mu_hat * s) ** h * (1 + s) ** -m
    return _alg_halves(f0, h - theta, f1, theta - (d + 3) / 2, rtol) / theta


def special_K_nested(d, theta, mu_hat, rtol=1e-11):
    """`special_K` from its defining double integral, in logarithmic variables."""
    if not (d + 1) / 2 < theta < d / 2 + 1:
        raise ValueError("need (d+1)/2 < theta < d/2 + 1")
    h, m = d / 2, (d + 1) / 2
    opts = dict(epsabs=0, epsrel=rtol, limit=400)

    lm = np.log(mu_hat)

    def outer(x):
        g = lambda y: np.exp((h + 1) * y + h * np.logaddexp(y, lm)
                             - m * np.logaddexp(y, 0.0) - theta * x)
        return integrate.quad(g, x - 200.0, x, **opts)[0]

    return sum(integrate.quad(outer, a, b, **opts)[0]
               for a, b in ((-200.0, -20.0), (-20.0, 0.0), (0.0, 20.0), (20.0, 400.0)))


_POWERS = {
    "xi_std": lambda d, th: (d + 1) / 2,
    "sigma_std": lambda d, th: (d - 1) / 2,
    "xi_weak": lambda d, th: th + 1,
    "sigma_weak": lambda d, th: th - 1,
}


def asym_leading(regime, V=None, theta=None, v=1.0, d=3, params=None,
                 sigma_weak_factor="derived"):
    """Leading large-``p`` coefficient of ``Xi_p`` or ``Sigma_p``.

    Parameters
    ----------
    regime : {'xi_std', 'sigma_std', 'xi_weak', 'sigma_weak'}
        Standard regimes use norms of ``V``; weak regimes use the model
        tail ``v r^(-d/theta)``.
    V : Potential, optional
        Required for the standard regimes.
    theta, v : float, optional
        Model parameters for the weak regimes.
    d : int
    params : PhysParams, optional
        Supplies ``M`` and ``mu_hat`` for the weak regimes.
    sigma_weak_factor : {'derived', 'printed'}
        Power of two in the ``sigma_weak`` prefactor: ``2^(theta-1)`` from
        the change of variables, or the alternative ``2^(theta-3/2)``.

    Returns
    -------
    AsymptoticConstant
    """
    om = ball_volume(d)
    if regime in ("xi_std", "sigma_std"):
        if V is None:
            raise ValueError(f"{regime} needs a potential")
        d = V.d
        om = ball_volume(d)
        if regime == "xi_std":
            q = (d - 1) / 2
            c = om / (2 ** ((3 * d + 1) / 2) * np.pi ** d)
        else:
            q = (d + 1) / 2
            c = om / ((d + 1) * 2 ** ((3 * d - 1) / 2) * np.pi ** d)
        norm = _power_integral(V, q)
        return AsymptoticConstant(regime, c * norm, _POWERS[regime](d, None),
                                  {"d": d, "q": q})
    if regime not in ("xi_weak", "sigma_weak"):
        raise ValueError(f"unknown regime {regime!r}")
    if theta is None:
        raise ValueError(f"{regime} needs theta")
    params = params or PhysParams(0.5, 0.5, 1.0)
    M, mh = params.M, params.mu_hat
    base = theta * om ** 2 / (4 * np.pi) ** d * v ** theta
    if regime == "xi_weak":
        val = 2 ** theta * base * M ** (d - 1 - 2 * theta) * special_L(d, theta, mh)
    else:
        shift = {"derived": 1.0, "printed": 1.5}[sigma_weak_factor]
        val = 2 ** (theta - shift) * base * M ** (d + 1 - 2 * theta) * special_K(d, theta, mh)
    return AsymptoticConstant(regime, val, _POWERS[regime](d, theta),
                              {"d": d, "theta": theta, "v": v, "mu_hat": mh})


def _power_integral(V, q):
    """``int V^q`` allowing ``q < 1``."""
    val, _, _ = radial_integral(V, lambda w: np.abs(w) ** q, rtol=1e-11)
    return val

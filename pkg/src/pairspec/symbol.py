"""
Kinetic symbols of the relativistic pair operator.

Momenta are arrays whose last axis has length ``d``; component 0 is the
longitudinal coordinate ``eta`` and the remaining components form the
transversal vector ``zeta``.  All functions broadcast over leading axes.

The symbol of the rescaled kinetic energy is

    H_p(xi) = T_+(xi) + T_-(xi) - sqrt(1 + tau**2),
    T_pm(xi) = sqrt((eta -+ mu_pm)**2 + |zeta|**2 + mu_pm**2 tau**2),

with ``mu_pm = m_pm / M``, ``M = m_+ + m_-`` and ``tau = M / p``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError, RegimeError

__all__ = [
    "PhysParams", "momentum", "kinetic_t", "symbol_h", "symbol_massless",
    "symbol_g", "mollifier_scale", "MollifierSpec", "symbol_bump",
    "coherent_bump", "smooth_symbol", "admissible_c", "WindowCheck",
    "momentum_window_check", "ball_volume",
]


def ball_volume(d):
    """Volume ``omega_d`` of the unit ball in ``R^d``."""
    return np.pi ** (d / 2) / special.gamma(d / 2 + 1)


@dataclass(frozen=True)
class PhysParams:
    """Masses and total momentum of the pair, with derived constants.

    Parameters
    ----------
    m_plus, m_minus : float
        Positive particle masses.
    p : float
        Positive total momentum.

    Notes
    -----
    ``mu_plus + mu_minus == 1`` holds exactly because ``mu_minus`` is
    stored as ``1 - mu_plus``.
    """
    m_plus: float
    m_minus: float
    p: float

    def __post_init__(self):
        for name in ("m_plus", "m_minus", "p"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        object.__setattr__(self, "m_plus", float(self.m_plus))
        object.__setattr__(self, "m_minus", float(self.m_minus))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def from_reduced(cls, mu_tilde, tau, M=1.0):
        """Build parameters from the mass asymmetry and ``tau = M/p``."""
        if not 0 <= abs(mu_tilde) < 0.5:
            raise ValueError("|mu_tilde| must lie in [0, 1/2)")
        return cls(M * (0.5 - mu_tilde), M * (0.5 + mu_tilde), M / tau)

    @property
    def M(self):
        return self.m_plus + self.m_minus

    @property
    def mu_plus(self):
        return self.m_plus / self.M

    @property
    def mu_minus(self):
        return 1.0 - self.mu_plus

    @property
    def tau(self):
        return self.M / self.p

    @property
    def mu_tilde(self):
        return 0.5 * (self.mu_minus - self.mu_plus)

    @property
    def mu_hat(self):
        return 4.0 * self.mu_plus * self.mu_minus

    @property
    def upsilon(self):
        return float(np.hypot(1.0, self.tau))

    def mu(self, sign):
        return self.mu_plus if _sign(sign) > 0 else self.mu_minus

    def center(self, sign, d):
        """Return ``e_+ = (mu_+, 0, ...)`` or ``e_- = (-mu_-, 0, ...)``."""
        e = np.zeros(d)
        s = _sign(sign)
        e[0] = s * self.mu(s)
        return e

    def require_relativistic(self):
        """Raise `RegimeError` unless ``tau <= 1``."""
        if self.tau > 1.0:
            raise RegimeError(f"tau = M/p = {self.tau:g} exceeds 1")

    def with_p(self, p):
        return PhysParams(self.m_plus, self.m_minus, p)


def _sign(sign):
    if sign in ("+", 1, 1.0):
        return 1
    if sign in ("-", -1, -1.0):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def momentum(eta, zeta=()):
    """Stack longitudinal and transversal parts into a momentum array."""
    eta = np.asarray(eta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.size == 0:
        return eta[..., None]
    if zeta.ndim == 0:
        zeta = zeta[None]
    eta, zeta = np.broadcast_arrays(eta[..., None], zeta)
    return np.concatenate([eta[..., :1], zeta], axis=-1)


def _as_momentum(xi, d=None):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi[None]
    if d is not None and xi.shape[-1] != d:
        raise ValueError(f"momentum has dimension {xi.shape[-1]}, expected {d}")
    return xi


def _split(xi):
    return xi[..., 0], np.sum(xi[..., 1:] ** 2, axis=-1)


def kinetic_t(sign, xi, params, d=None):
    """One-particle symbol ``T_+`` or ``T_-``.

    Parameters
    ----------
    sign : {'+', '-', 1, -1}
        Which particle.
    xi : array_like, shape (..., d)
        Momenta.
    params : PhysParams
    d : int, optional
        Expected dimension, checked against ``xi``.

    Returns
    -------
    ndarray
        Values ``>= mu_pm * tau > 0``.
    """
    xi = _as_momentum(xi, d)
    s = _sign(sign)
    mu = params.mu(s)
    eta, z2 = _split(xi)
    return np.sqrt((eta - s * mu) ** 2 + z2 + (mu * params.tau) ** 2)


def symbol_h(xi, params, d=None):
    """Pair symbol ``H_p``; nonnegative, convex, zero at the origin."""
    xi = _as_momentum(xi, d)
    return (kinetic_t(1, xi, params) + kinetic_t(-1, xi, params)
            - np.hypot(1.0, params.tau))


def symbol_massless(xi, params, d=None):
    """Massless limit ``|e_+ - xi| + |e_- - xi| - 1``.

    Vanishes on the segment joining ``e_+`` and ``e_-``.
    """
    xi = _as_momentum(xi, d)
    eta, z2 = _split(xi)
    return (np.sqrt((eta - params.mu_plus) ** 2 + z2)
            + np.sqrt((eta + params.mu_minus) ** 2 + z2) - 1.0)


def symbol_g(xi, params, delta, d=None):
    """Dilated symbol ``G_{p,delta}(eta, zeta) = H_p((1 - delta) eta, zeta)``."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    xi = np.array(_as_momentum(xi, d), copy=True)
    xi[..., 0] *= 1.0 - delta
    return symbol_h(xi, params)


def _centers(params, d, variant, delta):
    if variant == "plain":
        scale = 1.0
    elif variant == "dilated":
        if delta is None or not 0 < delta < 0.5:
            raise ValueError("dilated variant needs delta in (0, 1/2)")
        scale = 1.0 / (1.0 - delta)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return [params.center(s, d) * scale for s in (1, -1)]


def _check_radius(r, params, variant):
    limit = min(params.mu_plus, params.mu_minus)
    if variant == "plain":
        limit /= 2
    if not 0 < r < limit:
        raise ValueError(f"r = {r!r} outside the admissible range (0, {limit:g})")


def mollifier_scale(xi, r, params, variant="plain", delta=None, d=None):
    """Position dependent smoothing scale.

    Inside a ball of radius ``r`` about a singular point ``c`` the scale is
    ``r * exp(-1 / (1 - |xi - c|**2 / r**2))``; it vanishes outside.

    Parameters
    ----------
    xi : array_like, shape (..., d)
    r : float
        Ball radius, ``0 < r < min(mu)/2`` for ``variant='plain'`` and
        ``0 < r < min(mu)`` for ``variant='dilated'``.
    params : PhysParams
    variant : {'plain', 'dilated'}
        ``'dilated'`` centers the balls at ``e_pm / (1 - delta)``.
    delta : float, optional

    Returns
    -------
    ndarray
    """
    xi = _as_momentum(xi, d)
    _check_radius(r, params, variant)
    out = np.zeros(xi.shape[:-1])
    for c in _centers(params, xi.shape[-1], variant, delta):
        rho2 = np.sum((xi - c) ** 2, axis=-1) / r ** 2
        inside = rho2 < 1
        out[inside] = r * np.exp(-1.0 / (1.0 - rho2[inside]))
    return out


def _bump_profile(rho):
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    m = rho < 1
    out[m] = np.exp(-1.0 / (1.0 - rho[m] ** 2))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """Radial bump ``c * exp(-1/(1-|x|^2))`` supported in the unit ball.

    Attributes
    ----------
    d : int
    kind : {'mass', 'l2'}
        ``'mass'`` normalizes the integral to one; ``'l2'`` normalizes the
        L2 norm to one (the coherent-state profile).
    const : float
        Normalizing constant ``c``.
    x_moment : float
        ``||x f||_2``.
    grad_moment : float
        ``||grad f||_2``.
    """
    d: int
    kind: str
    const: float
    x_moment: float
    grad_moment: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.const * _bump_profile(np.sqrt(np.sum(x ** 2, axis=-1)))


def _radial(f, d):
    area = d * ball_volume(d)
    val, _ = integrate.quad(lambda s: f(s) * s ** (d - 1), 0.0, 1.0,
                            epsabs=0, epsrel=1e-13, limit=200)
    return area * val


def _dprofile(s):
    return np.exp(-1.0 / (1.0 - s * s)) * (-2.0 * s / (1.0 - s * s) ** 2) if s < 1 else 0.0


@lru_cache(maxsize=None)
def _bump(d, kind):
    prof = lambda s: float(_bump_profile(s))
    if kind == "mass":
        c = 1.0 / _radial(prof, d)
    elif kind == "l2":
        c = 1.0 / np.sqrt(_radial(lambda s: prof(s) ** 2, d))
    else:
        raise ValueError(kind)
    xm = c * np.sqrt(_radial(lambda s: (s * prof(s)) ** 2, d))
    gm = c * np.sqrt(_radial(lambda s: _dprofile(s) ** 2, d))
    return MollifierSpec(d, kind, float(c), float(xm), float(gm))


def symbol_bump(d):
    """Unit-mass smoothing bump in ``R^d``."""
    return _bump(int(d), "mass")


def coherent_bump(d):
    """L2-normalized bump used as coherent-state profile."""
    return _bump(int(d), "l2")


# -- convolution quadrature --------------------------------------------------

@lru_cache(maxsize=32)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gauss01(n):
    x, w = _gauss(n)
    return 0.5 * (x + 1), 0.5 * w


def _directions(d, n):
    """Unit vectors and surface weights of a product rule on the sphere."""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if d == 2:
        m = 2 * n
        phi = (np.arange(m) + 0.5) * (2 * np.pi / m)
        return np.stack([np.cos(phi), np.sin(phi)], -1), np.full(m, 2 * np.pi / m)
    if d == 3:
        u, wu = _gauss(n)
        m = 2 * n
        phi = (np.arange(m) + 0.5) * (2 * np.pi / m)
        s = np.sqrt(1 - u ** 2)
        om = np.stack([np.repeat(u, m), np.outer(s, np.cos(phi)).ravel(),
                       np.outer(s, np.sin(phi)).ravel()], -1)
        return om, np.repeat(wu, m) * (2 * np.pi / m)
    raise ValueError("product sphere rule implemented for d <= 3")


@lru_cache(maxsize=32)
def _symmetric_rule(d, n):
    """Point-symmetric rule for ``g`` on the unit ball (weights sum to 1)."""
    if d <= 3:
        rho, wr = _gauss01(n)
        om, wo = _directions(d, n)
        nodes = (rho[:, None, None] * om[None]).reshape(-1, d)
        w = np.outer(wr * rho ** (d - 1) * _bump_profile(rho), wo).ravel()
    else:
        x, wx = _gauss(n)
        grids = np.meshgrid(*([x] * d), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], -1)
        w = np.prod(np.meshgrid(*([wx] * d), indexing="ij"), axis=0).ravel()
        w = w * _bump_profile(np.sqrt(np.sum(nodes ** 2, -1)))
        keep = w > 0
        nodes, w = nodes[keep], w[keep]
    return nodes, w / w.sum()


def _apex_rule(apex, n):
    """Rule for ``g`` in polar coordinates centered at an interior point."""
    d = apex.size
    om, wo = _directions(d, n)
    b = om @ apex
    rmax = -b + np.sqrt(b * b + 1 - apex @ apex)
    s, ws = _gauss01(n)
    rho = rmax[:, None] * s[None]
    nodes = apex + rho[..., None] * om[:, None, :]
    w = (wo * rmax)[:, None] * ws[None] * rho ** (d - 1)
    w = w * _bump_profile(np.sqrt(np.sum(nodes ** 2, -1)))
    return nodes.reshape(-1, d), (w / w.sum()).ravel()


def _convolve(fn, x, sigma, apex, tol, max_level):
    d = x.size
    use_apex = d <= 3 and np.sum(apex ** 2) < 1
    # the symbol is 2-Lipschitz, so sigma sets its natural absolute scale
    atol = tol * sigma
    prev, change = None, np.nan
    for level in range(max_level + 1):
        n = 8 * 2 ** level
        nodes, w = _apex_rule(apex, n) if use_apex else _symmetric_rule(d, n)
        val = w @ fn(x - sigma * nodes)
        if prev is not None:
            change = abs(val - prev)
            if change <= max(tol * abs(val), atol):
                return val
        prev = val
    raise QuadratureError(
        f"smoothed symbol did not reach rtol {tol:g} at xi={x} (last change "
        f"{change:g})")


def smooth_symbol(xi, r, params, mode="H", delta=None, g=None, quad_tol=1e-8,
                  d=None, max_level=3):
    """Mollified symbol ``H_{p,sigma}`` or ``G_{p,delta,sigma}``.

    The symbol is convolved with ``g`` rescaled to the local scale returned
    by `mollifier_scale`.  Outside the singular balls the scale is zero and
    the unsmoothed symbol is returned unchanged.

    Parameters
    ----------
    xi : array_like, shape (..., d)
    r : float
        Ball radius.
    params : PhysParams
    mode : {'H', 'G'}
        ``'H'`` smooths ``H_p`` with the plain scale, ``'G'`` smooths the
        dilated symbol with the dilated scale.
    delta : float, optional
        Dilation parameter, required for ``mode='G'``.
    g : MollifierSpec, optional
        Must be the unit-mass bump; only its dimension is checked.
    quad_tol : float
        Relative tolerance of the convolution quadrature.
    max_level : int
        Number of refinements before `QuadratureError` is raised.

    Returns
    -------
    ndarray
    """
    xi = _as_momentum(xi, d)
    dim = xi.shape[-1]
    if g is not None and (g.d != dim or g.kind != "mass"):
        raise ValueError("g must be the unit-mass bump in matching dimension")
    if mode == "H":
        fn = lambda z: symbol_h(z, params)
        variant = "plain"
    elif mode == "G":
        fn = lambda z: symbol_g(z, params, delta)
        variant = "dilated"
    else:
        raise ValueError(f"mode must be 'H' or 'G', got {mode!r}")
    sigma = mollifier_scale(xi, r, params, variant, delta)
    out = np.array(fn(xi), dtype=float)
    centers = _centers(params, dim, variant, delta)
    flat_xi = xi.reshape(-1, dim)
    flat_s = sigma.reshape(-1)
    flat_out = out.reshape(-1)
    for i in np.flatnonzero(flat_s > 0):
        x = flat_xi[i]
        c = min(centers, key=lambda c: np.sum((x - c) ** 2))
        dist2 = np.sum((x - c) ** 2)
        apex = (x - c) / flat_s[i] if dist2 < flat_s[i] ** 2 else np.full(dim, 2.0)
        flat_out[i] = _convolve(fn, x, flat_s[i], apex, quad_tol, max_level)
    return flat_out.reshape(out.shape)


def admissible_c(params, deltas=None):
    """Empirical admissibility constant for the dilated smoothing.

    Returns the minimum over a grid of ``delta`` and both signs of
    ``(H_p(e_{pm,delta}) - G_{p,delta}(e_{pm,delta})) / (4 delta)``
    where ``e_{pm,delta} = e_pm / (1 - delta)``.
    """
    if deltas is None:
        deltas = np.geomspace(1e-3, 0.49, 60)
    best = np.inf
    for delta in np.atleast_1d(deltas):
        for c in _centers(params, 1, "dilated", delta):
            gap = symbol_h(c, params) - symbol_g(c, params, delta)
            best = min(best, float(gap) / (4 * delta))
    return best


@dataclass(frozen=True)
class WindowCheck:
    in_window: np.ndarray
    inequality_holds: np.ndarray
    value: np.ndarray


def momentum_window_check(xi, nu, params, d=None):
    """Lower bound of the relative kinetic energy on a momentum window.

    ``xi`` is an unrescaled momentum.  The window is ``|eta| >= 3p`` or
    ``|zeta|**2 >= nu p``, the energy is ``p * H_p(xi / p)``, and on the
    window the check is ``value >= nu / (2 sqrt 3)``.  Outside the window
    the inequality is reported as holding.

    Raises
    ------
    ValueError
        Unless ``p >= nu >= M``.
    """
    p = params.p
    if not p >= nu >= params.M:
        raise ValueError(f"need p >= nu >= M, got p={p:g}, nu={nu:g}, M={params.M:g}")
    xi = _as_momentum(xi, d)
    eta, z2 = _split(xi)
    inw = (np.abs(eta) >= 3 * p) | (z2 >= nu * p)
    value = p * symbol_h(xi / p, params)
    holds = ~inw | (value >= nu / (2 * np.sqrt(3)))
    return WindowCheck(inw, holds, value)

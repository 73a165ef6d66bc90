"""
Distribution functions, decreasing rearrangements and Lorentz-type functionals.

Two representations are provided.

* `DistributionFn` / `RearrangedFn`: sampled on geometric grids, with
  piecewise power-law (log-log linear) interpolation, integrated exactly
  panel by panel, and power-law head/tail descriptors beyond the grid.
* `DiscreteFn`: a step function given by values and cell measures, for
  which every quantity is computed exactly.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .symbol import ball_volume

__all__ = [
    "PowerLaw", "DistributionFn", "RearrangedFn", "DiscreteFn",
    "distribution_fn", "rearrangement", "rearrange_potential",
    "distribution_from_rearranged", "weak_quasinorm", "asym_functionals",
    "q_average", "equimeasurable_integral",
]

# exponent tolerance when comparing a tail with the critical power -1/q
TAIL_TOL = 0.05


@dataclass(frozen=True)
class PowerLaw:
    """``coeff * x**exponent``; ``coeff == 0`` encodes an identically zero end."""
    exponent: float
    coeff: float

    def __call__(self, x):
        return self.coeff * np.power(x, self.exponent)

    @property
    def is_zero(self):
        return self.coeff == 0


def _fit(x, y):
    """Least-squares power law through positive samples."""
    m = (x > 0) & (y > 0)
    if m.sum() < 2:
        return PowerLaw(0.0, 0.0)
    lx, ly = np.log(x[m]), np.log(y[m])
    k, b = np.polyfit(lx, ly, 1)
    return PowerLaw(float(k), float(np.exp(b)))


def _decade(x, first):
    """Mask of the first or last decade of a positive increasing grid."""
    if first:
        return x <= x[0] * 10
    return x >= x[-1] / 10


def _loglog(x, xs, ys):
    """Piecewise power interpolation; linear on panels with a zero end."""
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
    x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
    t = (x - x0) / (x1 - x0)
    lin = y0 + t * (y1 - y0)
    both = (y0 > 0) & (y1 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(both, np.log(np.where(both, y1 / np.where(both, y0, 1), 1))
                     / np.log(x1 / x0), 0.0)
        pw = y0 * np.power(x / x0, k)
    return np.where(both, pw, lin)


def _panel_power_integral(x0, x1, y0, y1, q, w=0.0):
    """``int_{x0}^{x1} x^w y(x)^q dx`` for the panel interpolant of `_loglog`."""
    x0, x1, y0, y1 = map(np.asarray, (x0, x1, y0, y1))
    out = np.zeros(np.broadcast(x0, y0).shape)
    both = (y0 > 0) & (y1 > 0)
    if np.any(both):
        a, b, u, v = x0[both], x1[both], y0[both], y1[both]
        k = np.log(v / u) / np.log(b / a)
        e = k * q + w + 1
        L = np.log(b / a)
        small = np.abs(e * L) < 1e-8
        # u^q a^-(kq) int_a^b x^(kq+w) dx
        pref = u ** q * a ** (w + 1)
        val = np.where(small, pref * L * (1 + e * L / 2),
                       pref * np.expm1(np.where(small, 0.0, e) * L) / np.where(small, 1.0, e))
        out[both] = val
    lin = ~both
    if np.any(lin):
        if w != 0:
            raise NotImplementedError("weighted integral on a linear panel")
        a, b, u, v = x0[lin], x1[lin], y0[lin], y1[lin]
        # y linear from u to v: int y^q dx = (b-a)(v^(q+1)-u^(q+1))/((q+1)(v-u))
        dv = v - u
        same = np.abs(dv) <= 1e-300
        num = np.where(same, (b - a) * u ** q,
                       (b - a) * (v ** (q + 1) - u ** (q + 1))
                       / np.where(same, 1.0, (q + 1) * dv))
        out[lin] = num
    return out


def _power_tail(pl, a, q, w=0.0, to_zero=False):
    """``int x^w (pl(x))^q`` over ``[a, inf)`` or ``(0, a]`` if ``to_zero``."""
    if pl.is_zero:
        return 0.0
    e = pl.exponent * q + w + 1
    if to_zero:
        if e <= 0:
            raise DivergenceError("head singularity too strong for integrability")
        return pl.coeff ** q * a ** e / e
    if e >= 0:
        raise DivergenceError("tail too heavy for integrability")
    return -pl.coeff ** q * a ** e / e


@dataclass(frozen=True)
class DistributionFn:
    """Sampled distribution function ``nu(s) = |{f > s}|``.

    Attributes
    ----------
    s : ndarray
        Increasing positive thresholds.
    nu : ndarray
        Nonincreasing measures.
    low : PowerLaw
        Behaviour for ``s < s[0]``.
    high : PowerLaw
        Behaviour for ``s > s[-1]`` (zero for bounded functions).
    total : float
        ``nu(0+)``, the measure of the support (``inf`` if unbounded).
    """
    s: np.ndarray
    nu: np.ndarray
    low: PowerLaw
    high: PowerLaw
    total: float

    def __post_init__(self):
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("thresholds must increase")
        if np.any(np.diff(self.nu) > 1e-12 * np.max(self.nu)):
            raise ValueError("distribution must be nonincreasing")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = _loglog(np.clip(s, self.s[0], self.s[-1]), self.s, self.nu)
        out = np.where(s < self.s[0], np.minimum(self.low(np.maximum(s, 1e-300)), self.total)
                       if not self.low.is_zero else self.nu[0], out)
        return np.where(s > self.s[-1], self.high(s) if not self.high.is_zero else 0.0, out)

    def moment_above(self, a):
        """``int_a^inf s nu(s) ds``."""
        total = 0.0
        s, nu = self.s, self.nu
        if a < s[0]:
            if self.low.is_zero:
                total += nu[0] * (s[0] ** 2 - a ** 2) / 2
            else:
                total += (_power_tail(self.low, s[0], 1, 1.0, to_zero=True)
                          - (_power_tail(self.low, a, 1, 1.0, to_zero=True) if a > 0 else 0.0))
            a = s[0]
        if a < s[-1]:
            j = int(np.searchsorted(s, a, side="right")) - 1
            na = float(self(a))
            x0 = np.concatenate([[a], s[j + 1:-1]])
            x1 = s[j + 1:]
            y0 = np.concatenate([[na], nu[j + 1:-1]])
            y1 = nu[j + 1:]
            total += float(np.sum(_linear_or_power_moment(x0, x1, y0, y1)))
            a = s[-1]
        if not self.high.is_zero:
            total += _power_tail(self.high, a, 1, 1.0)
        return total


def _linear_or_power_moment(x0, x1, y0, y1):
    """``int s nu(s) ds`` on panels, power panels exactly, linear panels exactly."""
    both = (y0 > 0) & (y1 > 0)
    out = np.zeros(x0.shape)
    if np.any(both):
        out[both] = _panel_power_integral(x0[both], x1[both], y0[both], y1[both], 1, 1.0)
    lin = ~both
    if np.any(lin):
        a, b, u, v = x0[lin], x1[lin], y0[lin], y1[lin]
        slope = (v - u) / (b - a)
        # int_a^b s (u + slope (s - a)) ds
        out[lin] = (u - slope * a) * (b ** 2 - a ** 2) / 2 + slope * (b ** 3 - a ** 3) / 3
    return out


@dataclass(frozen=True)
class RearrangedFn:
    """Sampled decreasing rearrangement ``f*``.

    Attributes
    ----------
    t : ndarray
        Increasing positive grid on the measure axis.
    values : ndarray
        Nonincreasing samples of ``f*``.
    head : PowerLaw
        ``f*`` for ``t < t[0]``.
    tail : PowerLaw
        ``f*`` for ``t > t[-1]`` up to ``support``.
    support : float
        ``f* = 0`` for ``t >= support`` (``inf`` if not compact).
    """
    t: np.ndarray
    values: np.ndarray
    head: PowerLaw
    tail: PowerLaw
    support: float = np.inf

    @property
    def tail_kind(self):
        return "compact" if np.isfinite(self.support) or self.tail.is_zero else "power"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = _loglog(np.clip(t, self.t[0], self.t[-1]), self.t, self.values)
        out = np.where(t < self.t[0], self.head(np.maximum(t, 1e-300)), out)
        out = np.where(t > self.t[-1], self.tail(t), out)
        return np.where(t >= self.support, 0.0, out)

    def power_integral(self, q, t_hat=np.inf):
        """``int_0^t_hat (f*)^q dt``."""
        t, f = self.t, self.values
        total = 0.0
        a = min(t_hat, t[0])
        total += _power_tail(self.head, a, q, to_zero=True) if not self.head.is_zero else 0.0
        if t_hat > t[0]:
            b = min(t_hat, t[-1], self.support)
            j = int(np.searchsorted(t, b, side="left"))
            x1 = np.concatenate([t[1:j], [b]]) if j >= 1 else np.array([b])
            x0 = t[:x1.size]
            y0 = f[:x1.size]
            y1 = np.concatenate([f[1:j], [float(self(b))]])
            total += float(np.sum(_panel_power_integral(x0, x1, y0, y1, q)))
        if t_hat > t[-1] and not self.tail.is_zero:
            top = min(t_hat, self.support)
            if np.isfinite(top):
                total += _power_tail(self.tail, t[-1], q) - _power_tail(self.tail, top, q)
            else:
                total += _power_tail(self.tail, t[-1], q)
        return total

    def sq_integral(self, t_hat):
        return self.power_integral(2.0, t_hat)


def _default_s_grid(sup, n=1200, decades=12):
    lo = sup * np.geomspace(10.0 ** -decades, 1.0, n, endpoint=False)
    hi = sup * (1 - np.geomspace(0.5, 10.0 ** -decades, n))
    return np.unique(np.concatenate([lo, hi, [sup]]))


def distribution_fn(V, s_grid=None):
    """Distribution function of a radial potential.

    ``nu(s) = omega_d r(s)^d`` where ``r(s)`` is the outermost radius with
    ``V(r) > s``.

    Parameters
    ----------
    V : Potential
    s_grid : array_like, optional
        Increasing thresholds; defaults to a grid dense near 0 and near
        ``sup V``.
    """
    om = ball_volume(V.d)
    s = _default_s_grid(V.sup) if s_grid is None else np.asarray(s_grid, dtype=float)
    s = s[s > 0]
    if s[-1] < V.sup:
        s = np.append(s, V.sup)
    nu = np.array([om * V.support_radius(x) ** V.d if x < V.sup else 0.0 for x in s])
    if not np.all(np.isfinite(nu)):
        raise ValueError("level-set radius not bracketable")
    total = om * V.support_radius(0.0) ** V.d
    low = _fit(s[_decade(s, True)], nu[_decade(s, True)])
    if np.isfinite(total):
        low = PowerLaw(0.0, 0.0)
    return DistributionFn(s, nu, low, PowerLaw(0.0, 0.0), total)


def rearrangement(nu, t_grid=None, per_decade=100, decades=12):
    """Generalized inverse ``f*(t) = inf{s : nu(s) <= t}``.

    Parameters
    ----------
    nu : DistributionFn
    t_grid : array_like, optional
        By default a geometric grid with ``per_decade`` points per decade
        from the largest finite sample of ``nu`` down by ``decades`` decades,
        extended to two decades below the smallest positive sample.
    """
    s, v = nu.s, nu.nu
    pos = v[v > 0]
    if pos.size == 0:
        return RearrangedFn(np.array([1.0, 2.0]), np.zeros(2), PowerLaw(0.0, 0.0),
                            PowerLaw(0.0, 0.0), 0.0)
    if t_grid is None:
        t_hi = pos.max()
        t_lo = min(t_hi * 10.0 ** -decades, pos.min() * 1e-2)
        n = int(np.ceil(np.log10(t_hi / t_lo) * per_decade)) + 1
        t_grid = np.geomspace(t_lo, t_hi, n)
    t = np.asarray(t_grid, dtype=float)
    # reverse axes: nu decreasing in s -> s as function of nu
    vals = np.empty_like(t)
    for i, x in enumerate(t):
        j = int(np.argmax(v <= x)) if np.any(v <= x) else -1
        if j == 0:
            vals[i] = s[0] if nu.low.is_zero else float(_invert_power(nu.low, x, s[0]))
        elif j == -1:
            vals[i] = s[-1]
        else:
            a, b, u, w = s[j - 1], s[j], v[j - 1], v[j]
            if w > 0:
                # u (s/a)^k = x
                k = np.log(w / u) / np.log(b / a)
                vals[i] = a * (x / u) ** (1 / k) if k != 0 else b
            else:
                vals[i] = a + (u - x) / u * (b - a)
    vals = np.minimum.accumulate(vals)
    head = _fit(t[_decade(t, True)], vals[_decade(t, True)])
    if nu.high.is_zero:
        head = PowerLaw(0.0, float(vals[0]))
    support = nu.total
    tail = _fit(t[_decade(t, False)], vals[_decade(t, False)])
    if np.isfinite(support):
        tail = PowerLaw(0.0, 0.0) if t[-1] >= support else tail
    return RearrangedFn(t, vals, head, tail, support)


def _invert_power(pl, x, cap):
    """Solve ``pl(s) = x`` for ``s``, capped at ``cap``."""
    if pl.exponent == 0:
        return cap
    return min(cap, (x / pl.coeff) ** (1 / pl.exponent))


def rearrange_potential(V, t_grid=None, per_decade=100, decades=12):
    """Exact rearrangement of a nonincreasing radial potential.

    ``f*(t) = V((t / omega_d)^(1/d))``.  For power tails the default grid
    extends six decades past the tail radius so that its last decade lies
    in the tail.
    """
    if not V.monotone:
        raise ValueError("exact rearrangement needs a nonincreasing profile")
    om = ball_volume(V.d)
    R = V.tail.radius
    if t_grid is None:
        top = om * R ** V.d
        extra = 6 if V.tail.kind == "power" else 0
        t_grid = top * np.geomspace(10.0 ** -decades, 10.0 ** extra,
                                    (decades + extra) * per_decade + 1)
    t = np.asarray(t_grid, dtype=float)
    vals = V((t / om) ** (1.0 / V.d))
    if V.tail.kind == "power":
        tl = V.tail
        tail = PowerLaw(-tl.alpha / V.d, tl.coeff * om ** (tl.alpha / V.d))
        support = np.inf
    else:
        tail = PowerLaw(0.0, 0.0)
        support = om * R ** V.d
    head = PowerLaw(0.0, float(V(0.0)))
    return RearrangedFn(t, vals, head, tail, support)


def distribution_from_rearranged(f, n=None):
    """Distribution function of a sampled rearrangement.

    The roles of the axes are swapped: ``nu(f*(t_i)) = t_i``.
    """
    pos = f.values > 0
    s = f.values[pos][::-1]
    nu = f.t[pos][::-1]
    s, idx = np.unique(s, return_index=True)
    nu = nu[idx]
    # high end of s <-> small t (head); low end of s <-> large t (tail)
    if f.head.exponent < 0 and not f.head.is_zero:
        high = PowerLaw(1 / f.head.exponent, f.head.coeff ** (-1 / f.head.exponent))
    else:
        high = PowerLaw(0.0, 0.0)
        if f.head.coeff > s[-1]:
            s = np.append(s, f.head.coeff)
            nu = np.append(nu, 0.0)
    if f.tail_kind == "power" and f.tail.exponent < 0:
        low = PowerLaw(1 / f.tail.exponent, f.tail.coeff ** (-1 / f.tail.exponent))
        total = np.inf
    else:
        low = PowerLaw(0.0, 0.0)
        total = f.support if np.isfinite(f.support) else float(nu[0])
    return DistributionFn(s, nu, low, high, total)


class DiscreteFn:
    """Step function with values ``c_i`` on cells of measure ``m_i``.

    Supports the rearrangement, distribution and integral queries exactly.

    Parameters
    ----------
    values : array_like
        Nonnegative cell values (absolute values are used).
    weights : array_like or float
        Cell measures.
    """

    def __init__(self, values, weights):
        c = np.abs(np.asarray(values, dtype=float)).ravel()
        m = np.broadcast_to(np.asarray(weights, dtype=float), c.shape).ravel()
        order = np.argsort(-c, kind="stable")
        self.c = c[order]
        self.m = m[order]
        self.T = np.cumsum(self.m)
        self.total = float(self.T[-1]) if self.c.size else 0.0
        # cumulative c^2 m for fast partial integrals
        self._c2m = np.concatenate([[0.0], np.cumsum(self.c ** 2 * self.m)])

    def __call__(self, t):
        """Rearrangement ``f*(t)``."""
        t = np.asarray(t, dtype=float)
        i = np.searchsorted(self.T, t, side="right")
        return np.where(i < self.c.size, self.c[np.minimum(i, self.c.size - 1)], 0.0)

    def distribution(self, s):
        """``nu(s) = sum of m_i with c_i > s``."""
        s = np.asarray(s, dtype=float)
        # c sorted descending: count of c_i > s
        k = np.searchsorted(-self.c, -s, side="left")
        return np.where(k > 0, self.T[np.maximum(k - 1, 0)], 0.0)

    def sq_integral(self, t_hat):
        """``int_0^t_hat (f*)^2 dt``; vectorized over ``t_hat``."""
        t = np.asarray(t_hat, dtype=float)
        i = np.searchsorted(self.T, t, side="right")
        inside = i < self.c.size
        j = np.minimum(i, self.c.size - 1)
        prev = np.where(i > 0, self.T[np.maximum(i - 1, 0)], 0.0)
        acc = self._c2m[i] + np.where(inside, self.c[j] ** 2 * (t - prev), 0.0)
        return float(acc) if acc.ndim == 0 else acc

    def power_integral(self, q, t_hat=np.inf):
        i = int(np.searchsorted(self.T, t_hat, side="right"))
        acc = float(np.sum(self.c[:i] ** q * self.m[:i]))
        if i < self.c.size:
            prev = self.T[i - 1] if i > 0 else 0.0
            acc += self.c[i] ** q * (t_hat - prev)
        return acc

    def moment_above(self, a):
        """``int_a^inf s nu(s) ds = sum over c_i > a of m_i (c_i^2 - a^2) / 2``."""
        a = np.asarray(a, dtype=float)
        k = np.searchsorted(-self.c, -a, side="left")
        mass = np.where(k > 0, self.T[np.maximum(k - 1, 0)], 0.0)
        acc = np.maximum(self._c2m[k] - a * a * mass, 0.0) / 2
        return float(acc) if acc.ndim == 0 else acc

    def weak_quasinorm(self, q):
        return float(np.max(self.T ** (1 / q) * self.c)) if self.c.size else 0.0


def weak_quasinorm(f, q):
    """``sup_t t^(1/q) f*(t)``.

    Raises
    ------
    DivergenceError
        If the tail decays slower than ``t^(-1/q)`` or the head is more
        singular than ``t^(-1/q)``.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if isinstance(f, DiscreteFn):
        return f.weak_quasinorm(q)
    crit = -1.0 / q
    if not f.head.is_zero and f.head.exponent < crit - TAIL_TOL:
        raise DivergenceError("rearrangement too singular at 0 for weak L^q")
    best = float(np.max(f.t ** (1 / q) * f.values))
    if f.tail_kind == "power" and not f.tail.is_zero:
        if f.tail.exponent > crit + TAIL_TOL:
            raise DivergenceError(
                f"tail exponent {f.tail.exponent:.3g} shallower than -1/q = {crit:.3g}")
        if f.tail.exponent >= crit - TAIL_TOL:
            best = max(best, f.tail.coeff)
    return best


def asym_functionals(f, q):
    """Lower and upper limits of ``t^(1/q) f*(t)`` as ``t -> inf``.

    Uses the last decade of the grid when the tail is critical.

    Returns
    -------
    delta_q, Delta_q : float
    """
    if f.tail_kind == "compact":
        return 0.0, 0.0
    crit = -1.0 / q
    e = f.tail.exponent
    if e < crit - TAIL_TOL:
        return 0.0, 0.0
    if e > crit + TAIL_TOL:
        return np.inf, np.inf
    m = _decade(f.t, False)
    g = f.t[m] ** (1 / q) * f.values[m]
    return float(g.min()), float(g.max())


def q_average(nu, q_star, t_hat, return_both=False):
    """Modified Cwikel average ``<q>(t_hat)``.

    ``<q>^2 = t_hat^-1 int_0^t_hat (q*)^2 dt`` (direct form) equals
    ``q*(t_hat)^2 + 2 t_hat^-1 int_{q*(t_hat)}^inf s nu(s) ds`` (layer form).
    The layer form is returned.

    Parameters
    ----------
    nu : DistributionFn or DiscreteFn
    q_star : RearrangedFn or DiscreteFn
    t_hat : float or ndarray
        Arrays are accepted when both inputs are `DiscreteFn`.
    return_both : bool
        Also return the direct form.
    """
    if np.any(np.asarray(t_hat) <= 0):
        raise ValueError("t_hat must be positive")
    if isinstance(q_star, DiscreteFn) and isinstance(nu, DiscreteFn):
        t_hat = np.asarray(t_hat, dtype=float)
        a = q_star(t_hat)
    else:
        a = float(q_star(t_hat))
    direct = np.sqrt(q_star.sq_integral(t_hat) / t_hat)
    layer = np.sqrt(a * a + 2 * nu.moment_above(a) / t_hat)
    return (layer, direct) if return_both else layer


def equimeasurable_integral(V, q, t_grid=None):
    """``int (f*)^q dt`` for the exact rearrangement of a radial potential."""
    return rearrange_potential(V, t_grid).power_integral(q)

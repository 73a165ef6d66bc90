"""
Radial potentials, the pair-frame rescaling and radial integrals.

A `Potential` is a nonnegative radial profile ``r -> V(r)`` in ``R^d``
together with the data needed to integrate functions of it: interior
breakpoints and a description of the large-``r`` behaviour.  The tail is
either compact (``V = 0`` beyond a radius) or an exact power law
``coeff * r**(-alpha)`` beyond a radius.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import DivergenceError
from .symbol import ball_volume

__all__ = [
    "Tail", "Potential", "ScaledPotential", "eval_model", "model_potential",
    "gaussian_potential", "smooth_well", "table_potential", "radial_potential",
    "load_radial_table", "scale_to_pair_frame", "lq_norm", "radial_integral",
]

# integrand is dropped once it falls below this fraction of its peak
TRUNCATION = 1e-14
# tail estimate above this multiple of the bulk signals divergence
DIVERGENCE_RATIO = 1e6


@dataclass(frozen=True)
class Tail:
    """Large-radius behaviour of a profile.

    ``kind='compact'``: the profile vanishes for ``r > radius``.
    ``kind='power'``: the profile equals ``coeff * r**(-alpha)`` for
    ``r >= radius``.
    """
    kind: str
    radius: float
    coeff: float = 0.0
    alpha: float = 0.0


@dataclass(frozen=True, eq=False)
class Potential:
    """Nonnegative radial potential.

    Parameters
    ----------
    d : int
        Space dimension.
    profile : callable
        Vectorized map ``r -> V(r)`` for ``r >= 0``.
    sup : float
        Supremum of the profile.
    knots : tuple of float
        Radii where the profile is not smooth.
    tail : Tail
    kind : str
        Descriptive label (``'model'``, ``'gaussian'``, ``'table'``, ...).
    info : dict
        Construction parameters.
    monotone : bool
        True if the profile is nonincreasing.
    """
    d: int
    profile: object
    sup: float
    knots: tuple
    tail: Tail
    kind: str = "custom"
    info: dict = field(default_factory=dict)
    monotone: bool = True

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.asarray(self.profile(r), dtype=float)

    def at(self, y):
        """Evaluate at points ``y`` of shape ``(..., d)``."""
        y = np.asarray(y, dtype=float)
        return self(np.sqrt(np.sum(y ** 2, axis=-1)))

    def scaled(self, factor):
        """Return ``factor * V``."""
        if factor <= 0:
            raise ValueError("amplitude factor must be positive")
        prof = self.profile
        t = self.tail
        tail = Tail(t.kind, t.radius, t.coeff * factor, t.alpha)
        return Potential(self.d, lambda r: factor * prof(r), self.sup * factor,
                         self.knots, tail, self.kind,
                         dict(self.info, amplitude=factor), self.monotone)

    def support_radius(self, level=0.0):
        """Largest radius where ``V(r) > level`` (``inf`` if unbounded)."""
        t = self.tail
        if level <= 0:
            return np.inf if t.kind == "power" else t.radius
        if level >= self.sup:
            return 0.0
        if t.kind == "power" and self(t.radius) > level:
            return float((t.coeff / level) ** (1.0 / t.alpha))
        hi = t.radius
        if self.monotone:
            f = lambda r: float(self(r)) - level
            if f(hi) > 0:
                return hi
            return optimize.brentq(f, 0.0, hi, xtol=1e-15 * max(hi, 1.0))
        r = np.linspace(0.0, hi, 20001)
        above = np.flatnonzero(self(r) > level)
        if above.size == 0:
            return 0.0
        i = above[-1]
        if i == r.size - 1:
            return hi
        f = lambda s: float(self(s)) - level
        return optimize.brentq(f, r[i], r[i + 1], xtol=1e-14 * max(hi, 1.0))

    def shifted(self, c):
        """Return ``V - c`` for ``c >= 0``, compactly supported where positive."""
        if c < 0:
            raise ValueError("shift must be nonnegative")
        if c == 0:
            return self
        R = self.support_radius(c)
        prof = self.profile
        knots = tuple(k for k in self.knots if k < R) + ((R,) if R > 0 else ())
        return Potential(self.d, lambda r: prof(r) - c, self.sup - c, knots,
                         Tail("compact", R), self.kind,
                         dict(self.info, shift=c), self.monotone)


class ScaledPotential(Potential):
    """Pair-frame potential ``V_p(y) = V(|y|/p)/p``."""

    def __init__(self, base, p):
        if p <= 0:
            raise ValueError("p must be positive")
        t = base.tail
        if t.kind == "power":
            tail = Tail("power", t.radius * p, t.coeff * p ** (t.alpha - 1), t.alpha)
        else:
            tail = Tail(t.kind, t.radius * p)
        prof = base.profile
        super().__init__(base.d, lambda r: prof(np.asarray(r) / p) / p,
                         base.sup / p, tuple(k * p for k in base.knots), tail,
                         base.kind, dict(base.info, p=p), base.monotone)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "p", float(p))


def scale_to_pair_frame(V, p):
    """Rescale a potential to the pair frame, ``y -> V(|y|/p)/p``."""
    return ScaledPotential(V, p)


def eval_model(theta, v, r, d=3):
    """Model profile ``min(1, v * r**(-d/theta))``."""
    if theta <= 0 or v <= 0:
        raise ValueError("theta and v must be positive")
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        val = v * np.power(r, -d / theta)
    return np.minimum(1.0, val)


def model_potential(theta, v=1.0, d=3):
    """Model potential with unit plateau and tail ``v r^(-d/theta)``."""
    if theta <= 0 or v <= 0:
        raise ValueError("theta and v must be positive")
    rc = v ** (theta / d)
    return Potential(d, lambda r: eval_model(theta, v, r, d), 1.0, (rc,),
                     Tail("power", rc, v, d / theta), "model",
                     {"theta": theta, "v": v})


def gaussian_potential(a=1.0, w=1.0, d=3):
    """Gaussian well ``a exp(-(r/w)^2)``.

    The profile is treated as zero once it drops below ``1e-40 a``.
    """
    if a <= 0 or w <= 0:
        raise ValueError("a and w must be positive")
    R = w * np.sqrt(40 * np.log(10))
    return Potential(d, lambda r: a * np.exp(-(np.asarray(r) / w) ** 2), a, (w,),
                     Tail("compact", R), "gaussian", {"a": a, "w": w})


def smooth_well(a=1.0, R=1.0, d=3, k=3):
    """Compactly supported well ``a (1 - (r/R)^2)^k`` for ``r < R``.

    The profile is ``C^(k-1)`` across ``r = R``.
    """
    if a <= 0 or R <= 0 or k < 2:
        raise ValueError("need a > 0, R > 0 and k >= 2")

    def prof(r):
        u = np.clip(1.0 - (np.asarray(r, dtype=float) / R) ** 2, 0.0, None)
        return a * u ** k

    return Potential(d, prof, a, (), Tail("compact", R), "well", {"a": a, "R": R, "k": k})


def radial_potential(func, d=3, support=None, sup=None, knots=(), tail=None,
                     monotone=True, kind="custom"):
    """Wrap a vectorized profile.  Give ``support`` or a power ``tail``."""
    if tail is None:
        if support is None:
            raise ValueError("need a support radius or a tail description")
        tail = Tail("compact", float(support))
    if sup is None:
        r = np.linspace(0.0, tail.radius, 4001)
        sup = float(np.max(func(r)))
    return Potential(d, func, float(sup), tuple(knots), tail, kind, {}, monotone)


def table_potential(r, values, d=3):
    """Tabulated profile.

    Inside the table values are interpolated linearly in ``log V`` (linearly
    in ``V`` on intervals with a nonpositive endpoint).  Below the first
    radius the first value is used; beyond the last radius the profile is 0.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.size == 0 or r.shape != v.shape:
        raise ValueError("table needs matching nonempty 1-d radius and value arrays")
    if np.any(np.diff(r) <= 0):
        raise ValueError("table radii must be strictly increasing")
    if np.any(r < 0) or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("table radii and values must be nonnegative and finite")
    pos = v > 0
    logv = np.where(pos, np.log(np.where(pos, v, 1.0)), 0.0)

    def prof(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[x < r[0]] = v[0]
        if r.size == 1:
            out[x == r[0]] = v[0]
            return out
        inside = (x >= r[0]) & (x <= r[-1])
        xi = x[inside]
        i = np.clip(np.searchsorted(r, xi, side="right") - 1, 0, r.size - 2)
        t = (xi - r[i]) / (r[i + 1] - r[i])
        both = pos[i] & pos[i + 1]
        lin = (1 - t) * v[i] + t * v[i + 1]
        loglin = np.exp((1 - t) * logv[i] + t * logv[i + 1])
        out[inside] = np.where(both, loglin, lin)
        return out

    mono = bool(np.all(np.diff(v) <= 0))
    knots = tuple(k for k in r if k > 0)
    return Potential(d, prof, float(v.max()), knots, Tail("compact", float(r[-1])),
                     "table", {"n": int(r.size)}, mono)


def load_radial_table(path, d=3):
    """Read a whitespace separated ``r value`` table.

    Blank lines and lines starting with ``#`` are skipped.

    Raises
    ------
    ValueError
        On an empty table, a malformed line or non-increasing radii.
    """
    rs, vs = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'r value', got {line.strip()!r}")
            try:
                r, v = float(parts[0]), float(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry {line.strip()!r}") from None
            rs.append(r)
            vs.append(v)
    if not rs:
        raise ValueError(f"{path}: empty table")
    if np.any(np.diff(rs) <= 0):
        raise ValueError(f"{path}: radii must be strictly increasing")
    return table_potential(rs, vs, d)


# -- radial integration ------------------------------------------------------

def _local_power(F, v):
    """Exponent ``k`` with ``F(v) ~ v**k`` near a small value ``v``."""
    f1, f2 = F(np.array([v, v / 2]))
    if f1 <= 0 or f2 <= 0:
        return np.inf
    return np.log(f1 / f2) / np.log(2.0)


def radial_integral(V, F, levels=(), rtol=1e-8, r_min=None):
    """Integrate ``F(V(r))`` over ``R^d`` for a radial potential.

    Computes ``d omega_d int_0^inf F(V(r)) r^(d-1) dr`` in the variable
    ``u = log r``.  ``F`` must be vectorized, vanish at 0 and behave like a
    power near 0.  Radii where ``V`` crosses the values in ``levels`` are
    used as breakpoints.

    Returns
    -------
    value, abserr : float
    breakdown : list of (r_lo, r_hi, value)
        Contributions of the individual panels.

    Raises
    ------
    DivergenceError
        If the power tail makes the integral infinite or the tail estimate
        exceeds ``DIVERGENCE_RATIO`` times the bulk.
    """
    d = V.d
    surf = d * ball_volume(d)
    t = V.tail
    pts = set(k for k in V.knots if k > 0)
    for lev in levels:
        if 0 < lev < V.sup:
            R = V.support_radius(lev)
            if 0 < R < np.inf:
                pts.add(R)
    end = t.radius
    if end <= 0:
        return 0.0, 0.0, []
    pts = sorted(x for x in pts if x < end)
    scale = pts[0] if pts else end
    lo = r_min if r_min is not None else scale * 1e-10
    edges = [lo] + [x for x in pts if x > lo] + [end]

    def g(u):
        r = np.exp(u)
        val = F(np.atleast_1d(V(r)))
        return float(val[0]) * r ** d

    total, err = 0.0, 0.0
    pieces = []
    # bulk: the ball r < lo contributes at most F(sup) lo^d / d
    head = float(F(np.array([V.sup]))[0]) * lo ** d / d
    err += head
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(g, np.log(a), np.log(b), epsabs=0, epsrel=rtol,
                                limit=200)
        total += val
        err += e
        pieces.append((a, b, surf * val))
    if t.kind == "power":
        # beyond the tail radius substitute w = V(r) and integrate in log w
        k = _local_power(F, float(t.coeff) * 1e-30)
        kappa = k - d / t.alpha
        if not kappa > 1e-9 * max(k, 1.0):
            raise DivergenceError(
                f"radial integral diverges: tail exponent {kappa:.3g} <= 0")
        pre = t.coeff ** (d / t.alpha) / t.alpha

        def h(s):
            return float(F(np.atleast_1d(np.exp(s)))[0]) * np.exp(-d / t.alpha * s)

        bulk = total
        top = np.log(float(V(end)))
        cuts = sorted((np.log(x) for x in levels if 0 < x < np.exp(top)), reverse=True)
        tail = 0.0
        s = top
        while True:
            nxt = s - 2.0
            stops = [c for c in cuts if nxt < c < s]
            for a in stops + [nxt]:
                val, e = integrate.quad(h, a, s, epsabs=0, epsrel=rtol, limit=200)
                tail += val
                err += pre * e
                pieces.append(((t.coeff / np.exp(s)) ** (1 / t.alpha),
                               (t.coeff / np.exp(a)) ** (1 / t.alpha), surf * pre * val))
                s = a
            scale_ref = max(abs(bulk), abs(pre * tail), 1e-300)
            if pre * h(s) / kappa < TRUNCATION * scale_ref or s < -300:
                break
        rest = h(s) / kappa
        tail = pre * (tail + rest)
        err += pre * abs(rest)
        total += tail
        if bulk > 0 and tail > DIVERGENCE_RATIO * bulk:
            raise DivergenceError("tail contribution exceeds bulk by more than "
                                  f"{DIVERGENCE_RATIO:g}")
    return surf * total, surf * err, pieces


def lq_norm(V, q, rtol=1e-10):
    """``L^q`` norm of a radial potential.

    Raises
    ------
    DivergenceError
        If ``int V^q`` is infinite.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    val, _, _ = radial_integral(V, lambda w: np.abs(w) ** q, rtol=rtol)
    return val ** (1.0 / q)

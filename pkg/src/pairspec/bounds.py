"""
Right-hand sides of eigenvalue counting and moment bounds.

Families (``N_p`` counts the negative eigenvalues and ``S_p`` sums their
absolute values):

============  ================================================================
bd13          ``N_p <= c (p^2 (1 + ln p/M) |V|_1 + |V|_3^3)``, d = 3
bd13d4        ``N_p <= c (p^((d+1)/2) |V|_{(d-1)/2}^{(d-1)/2} + |V|_d^d)``, d >= 4
the11         ``N_p <= c1 p^(1+th) M^(d-1-2th) |V|_{th,w}^th + c2 |V|_d^d``
bd24          ``S_p <= c (p (1 + ln p/M) |V|_2^2 + p^-1 |V|_4^4)``, d = 3
bd245         ``S_p <= c (p^((d-1)/2) |V|_{(d+1)/2}^{(d+1)/2} + p^-1 |V|_{d+1}^{d+1})``
bd24theta     ``S_p <= c1 p^(th-1) M^(d+1-2th) |V|_{th,w}^th + c2 |V|_{d+1}^{d+1}``
============  ================================================================

The constants are not known explicitly; they default to 1 and can be
calibrated empirically.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .potential import radial_integral
from .rearrange import rearrange_potential, rearrangement, distribution_fn, weak_quasinorm

__all__ = [
    "CLR_FAMILIES", "LT_FAMILIES", "Term", "BoundReport", "default_constants",
    "clr_rhs", "lt_rhs", "cwikel_sval_bound", "bs_count_bound",
    "clr_classical", "aizenman_lieb",
]

CLR_FAMILIES = ("bd13", "bd13d4", "the11")
LT_FAMILIES = ("bd24", "bd245", "bd24theta")


@dataclass(frozen=True)
class Term:
    """One summand ``constant * p^p_power * M^m_power * log_factor * norm``."""
    name: str
    constant: float
    p_power: float
    m_power: float
    log_factor: float
    norm: float
    value: float


@dataclass
class BoundReport:
    family: str
    value: float
    terms: list
    constants: dict = field(default_factory=dict)

    def term(self, name):
        return next(t for t in self.terms if t.name == name)


def default_constants():
    """Constants record with every unknown constant set to 1."""
    fams = CLR_FAMILIES + LT_FAMILIES + ("clr_classical",)
    return {f: {"c1": 1.0, "c2": 1.0} for f in fams}


def _norm_power(V, q):
    """``int V^q``."""
    if V.sup <= 0:
        return 0.0
    return radial_integral(V, lambda w: np.abs(w) ** q, rtol=1e-10)[0]


def _weak_power(V, theta):
    """``|V|_{theta,w}^theta``."""
    if V.sup <= 0:
        return 0.0
    f = rearrange_potential(V) if V.monotone else rearrangement(distribution_fn(V))
    return weak_quasinorm(f, theta) ** theta


def _make(family, specs, p, M, consts):
    terms = []
    for name, ckey, pp, mp, logf, norm in specs:
        c = consts[family][ckey]
        val = c * p ** pp * M ** mp * logf * norm
        terms.append(Term(name, c, pp, mp, logf, norm, val))
    total = 0.0
    for t in terms:
        total += t.value
    return BoundReport(family, total, terms, dict(consts[family]))


def _check(params):
    if params.p < params.M:
        raise ValueError("bounds require p >= M")


def clr_rhs(V, params, family="bd13", constants=None, theta=None):
    """Counting bound for ``N_p(V)``.

    Parameters
    ----------
    V : Potential
        Unscaled potential.
    params : PhysParams
    family : {'bd13', 'bd13d4', 'the11'}
    constants : dict, optional
        As returned by `default_constants`.
    theta : float, optional
        Weak-space exponent for ``'the11'``; taken from a model potential
        when omitted.

    Returns
    -------
    BoundReport
    """
    _check(params)
    consts = constants or default_constants()
    p, M, d = params.p, params.M, V.d
    lg = 1 + np.log(p / M)
    if family == "bd13":
        if d != 3:
            raise ValueError("bd13 is the d = 3 family")
        specs = [("main", "c1", 2, 0, lg, _norm_power(V, 1)),
                 ("local", "c2", 0, 0, 1.0, _norm_power(V, 3))]
    elif family == "bd13d4":
        if d < 4:
            raise ValueError("bd13d4 needs d >= 4")
        specs = [("main", "c1", (d + 1) / 2, 0, 1.0, _norm_power(V, (d - 1) / 2)),
                 ("local", "c2", 0, 0, 1.0, _norm_power(V, d))]
    elif family == "the11":
        th = _theta(V, theta)
        if not (d - 1) / 2 < th < d / 2:
            raise ValueError("the11 needs (d-1)/2 < theta < d/2")
        specs = [("main", "c1", 1 + th, d - 1 - 2 * th, 1.0, _weak_power(V, th)),
                 ("local", "c2", 0, 0, 1.0, _norm_power(V, d))]
    else:
        raise ValueError(f"unknown counting family {family!r}")
    return _make(family, specs, p, M, consts)


def lt_rhs(V, params, family="bd24", constants=None, theta=None):
    """Moment bound for ``S_p(V)``; see `clr_rhs` for the parameters."""
    _check(params)
    consts = constants or default_constants()
    p, M, d = params.p, params.M, V.d
    lg = 1 + np.log(p / M)
    if family == "bd24":
        if d != 3:
            raise ValueError("bd24 is the d = 3 family")
        specs = [("main", "c1", 1, 0, lg, _norm_power(V, 2)),
                 ("local", "c2", -1, 0, 1.0, _norm_power(V, 4))]
    elif family == "bd245":
        if d < 4:
            raise ValueError("bd245 needs d >= 4")
        specs = [("main", "c1", (d - 1) / 2, 0, 1.0, _norm_power(V, (d + 1) / 2)),
                 ("local", "c2", -1, 0, 1.0, _norm_power(V, d + 1))]
    elif family == "bd24theta":
        th = _theta(V, theta)
        if not (d + 1) / 2 < th < d / 2 + 1:
            raise ValueError("bd24theta needs (d+1)/2 < theta < d/2 + 1")
        specs = [("main", "c1", th - 1, d + 1 - 2 * th, 1.0, _weak_power(V, th)),
                 ("local", "c2", 0, 0, 1.0, _norm_power(V, d + 1))]
    else:
        raise ValueError(f"unknown moment family {family!r}")
    return _make(family, specs, p, M, consts)


def _theta(V, theta):
    if theta is not None:
        return float(theta)
    if "theta" in V.info:
        return float(V.info["theta"])
    raise ValueError("theta required for weak-space families")


def cwikel_sval_bound(n, q_avg, d, measure="lebesgue"):
    """Singular value bound ``s_n <= 5 <q>((2 pi)^d n)``.

    Parameters
    ----------
    n : int
        Index, ``n >= 1``.
    q_avg : callable
        ``t_hat -> <q>(t_hat)``.
    d : int
    measure : {'lebesgue', 'phase'}
        Normalization of the measure behind ``q_avg``: Lebesgue measure on
        ``R^2d``, or the phase-space measure with density ``(2 pi)^-d``
        (then the argument is ``n``).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scale = {"lebesgue": (2 * np.pi) ** d, "phase": 1.0}[measure]
    return 5.0 * q_avg(scale * n)


def bs_count_bound(q_avg, d, measure="lebesgue", n_max=2 ** 60):
    """Largest ``N`` with ``<q>((2 pi)^d N) >= 1/5``.

    Returns 0 if the inequality fails at ``N = 1`` and ``inf`` if it holds
    up to ``n_max`` (vacuous bound).
    """
    scale = {"lebesgue": (2 * np.pi) ** d, "phase": 1.0}[measure]
    ok = lambda N: q_avg(scale * N) >= 0.2
    if not ok(1):
        return 0
    lo = 1
    hi = 2
    while ok(hi):
        lo = hi
        hi *= 2
        if hi > n_max:
            return np.inf
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def clr_classical(a_norm_r, b_weak_r, r, d, n, constant=1.0):
    """Classical singular value bound ``c n^(-1/r) |a|_r |b|_{r,w}`` for ``r > 2``."""
    if not 2 < r < np.inf:
        raise ValueError("need 2 < r < inf")
    if n < 1:
        raise ValueError("n must be >= 1")
    return constant * n ** (-1.0 / r) * a_norm_r * b_weak_r


def aizenman_lieb(count_fn, p=1.0, horizon=1.0, max_doublings=80, rtol=4 * np.finfo(float).eps):
    """Integrate a nonincreasing integer step function over ``[0, inf)``.

    ``S = int_0^inf N(u) du`` with ``N(u) = count_fn(u)``.  Each jump is
    located by bisection to relative precision ``rtol``; on intervals with
    equal end counts the function is constant by monotonicity.

    Parameters
    ----------
    count_fn : callable
        ``u -> N(u)``, nonincreasing, eventually 0.
    p : float
        Kept for interface symmetry; the count is already expressed in ``u``.
    horizon : float
        Initial guess of a point where the count vanishes.

    Raises
    ------
    ConvergenceError
        If no zero of the count is found after ``max_doublings`` doublings.
    """
    cache = {}

    def N(u):
        if u not in cache:
            val = int(count_fn(u))
            if val < 0:
                raise ValueError("count must be nonnegative")
            cache[u] = val
        return cache[u]

    U = float(horizon)
    for _ in range(max_doublings):
        if N(U) == 0:
            break
        U *= 2
    else:
        raise ConvergenceError("count did not vanish within the search horizon")

    total = 0.0
    stack = [(0.0, U, N(0.0), N(U))]
    while stack:
        a, b, na, nb = stack.pop()
        if na < nb:
            raise ValueError("count function is not nonincreasing")
        if na == nb:
            total += (b - a) * na
            continue
        if b - a <= rtol * max(abs(b), np.finfo(float).tiny):
            total += (b - a) * 0.5 * (na + nb)
            continue
        m = 0.5 * (a + b)
        nm = N(m)
        stack.append((a, m, na, nm))
        stack.append((m, b, nm, nb))
    return total

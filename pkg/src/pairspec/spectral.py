"""
Lattice discretization of the pair operator ``Q_p = H_p(i grad) - V_p(y)``.

The operator acts on functions on a periodic box ``[-L, L)^d`` sampled at
``n`` points per axis.  The kinetic part is the Fourier multiplier with the
symbol evaluated at the lattice momenta ``pi k / L``; the potential is a
multiplication operator.  Negative eigenvalues are computed densely for
small lattices and with implicitly restarted Lanczos otherwise.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, eigsh, ArpackNoConvergence

from .errors import ConvergenceError
from .phasespace import lambda_moment
from .potential import Potential, ScaledPotential, scale_to_pair_frame
from .rearrange import DiscreteFn
from .symbol import (PhysParams, coherent_bump, smooth_symbol, symbol_g,
                     symbol_h, ball_volume)

__all__ = [
    "GridSpec", "GridOperator", "SpectrumResult", "build_operator", "apply",
    "negative_spectrum", "count_below", "bs_singular_values",
    "product_symbol", "hessian_sup", "axial_hessian_sup", "symbol_theta",
    "potential_theta", "coherent_kappa", "SandwichResult",
    "berezin_sandwich", "local_density", "DENSE_LIMIT",
]

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class GridSpec:
    """Periodic lattice with ``n`` points per axis on ``[-L, L)^d``."""
    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def h(self):
        return 2 * self.L / self.n

    @property
    def size(self):
        return self.n ** self.d

    @property
    def shape(self):
        return (self.n,) * self.d

    def axis(self):
        return -self.L + self.h * np.arange(self.n)

    def freqs(self):
        return 2 * np.pi * np.fft.fftfreq(self.n, self.h)

    def points(self):
        ax = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        return np.stack(ax, axis=-1)

    def momenta(self):
        ax = np.meshgrid(*([self.freqs()] * self.d), indexing="ij")
        return np.stack(ax, axis=-1)

    @property
    def cell_measure(self):
        """Phase-space measure ``(h * pi / L)^d = (2 pi / n)^d`` of one lattice cell."""
        return (2 * np.pi / self.n) ** self.d


@dataclass
class GridOperator:
    grid: GridSpec
    params: PhysParams
    kinetic: np.ndarray
    potential: np.ndarray
    variant: str
    real: bool
    info: dict = field(default_factory=dict)

    @property
    def vmax(self):
        return float(np.max(np.abs(self.potential)))


def _as_pair_frame(V, params):
    if isinstance(V, ScaledPotential):
        if not np.isclose(V.p, params.p):
            raise ValueError("scaled potential built for a different p")
        return V
    if not isinstance(V, Potential):
        raise TypeError("V must be a Potential")
    return scale_to_pair_frame(V, params.p)


def _is_even(K):
    idx = tuple((-np.arange(s)) % s for s in K.shape)
    return np.array_equal(K, K[np.ix_(*idx)])


def _multiplier(params, grid, variant, r, delta, quad_tol):
    xi = grid.momenta()
    if variant == "h":
        return symbol_h(xi, params)
    if variant == "h-sigma":
        return smooth_symbol(xi, r, params, "H", quad_tol=quad_tol)
    if variant == "g-sigma":
        return smooth_symbol(xi, r, params, "G", delta=delta, quad_tol=quad_tol)
    raise ValueError(f"unknown variant {variant!r}")


def build_operator(V, params, grid, variant="h", r=None, delta=None,
                   regularization=0.0, leak_tol=1e-6, quad_tol=1e-7):
    """Tabulate the lattice operator.

    Parameters
    ----------
    V : Potential
        Unscaled potential (rescaled internally) or a `ScaledPotential`.
    params : PhysParams
    grid : GridSpec
    variant : {'h', 'h-sigma', 'g-sigma'}
        Kinetic symbol: plain, smoothed, or dilated and smoothed.
    r, delta : float, optional
        Smoothing radius and dilation for the smoothed variants.
    regularization : float
        Constant added to the multiplier.
    leak_tol : float
        Largest allowed ratio of boundary to peak potential.

    Raises
    ------
    ValueError
        If the potential does not decay inside the box.
    """
    if V is None or (not isinstance(V, Potential)) or V.d != grid.d:
        raise ValueError("potential missing or of wrong dimension")
    Vp = _as_pair_frame(V, params)
    pot = Vp.at(grid.points())
    peak = float(np.max(np.abs(pot)))
    if peak > 0:
        edge = max(float(np.max(np.abs(np.take(pot, 0, axis=k)))) for k in range(grid.d))
        if edge > leak_tol * peak:
            raise ValueError(f"potential leaks to the box boundary ({edge / peak:.2e} of peak)")
    if variant != "h" and r is None:
        raise ValueError("smoothed variants need r")
    K = _multiplier(params, grid, variant, r, delta, quad_tol) + regularization
    return GridOperator(grid, params, K, pot, variant, _is_even(K),
                        {"r": r, "delta": delta, "regularization": regularization})


def _axes(d):
    return tuple(range(-d, 0))


def apply(op, u):
    """Apply the lattice operator to a grid function or a batch of them.

    ``u`` has shape ``grid.shape`` or ``(m,) + grid.shape``.
    """
    u = np.asarray(u)
    g = op.grid
    if u.shape[-g.d:] != g.shape:
        raise ValueError(f"state shape {u.shape} does not match grid {g.shape}")
    ax = _axes(g.d)
    if op.real and np.isrealobj(u):
        half = op.kinetic[..., : g.n // 2 + 1]
        kin = np.fft.irfftn(half * np.fft.rfftn(u, axes=ax), s=g.shape, axes=ax)
    else:
        kin = np.fft.ifftn(op.kinetic * np.fft.fftn(u, axes=ax), axes=ax)
    return kin - op.potential * u


def _dense(op, multiplier=None, with_potential=True):
    g = op.grid
    N = g.size
    K = op.kinetic if multiplier is None else multiplier
    eye = np.eye(N).reshape((N,) + g.shape)
    ax = _axes(g.d)
    cols = np.fft.ifftn(K * np.fft.fftn(eye, axes=ax), axes=ax).reshape(N, N)
    A = cols.T
    A = 0.5 * (A + A.conj().T)
    if op.real and multiplier is None:
        A = A.real
    if with_potential:
        A = A - np.diag(op.potential.ravel())
    return A


@dataclass
class SpectrumResult:
    """Negative eigenvalues of a lattice operator.

    Attributes
    ----------
    eigenvalues : ndarray
        Eigenvalues below ``-eps_count``, ascending.
    count : int
    moment : float
        Sum of absolute values of ``eigenvalues``.
    residuals : ndarray
    converged : bool
    eps_count : float
    vectors : ndarray or None
        Eigenvectors as columns, normalized in the lattice l2 sense.
    method : str
    complete : bool
        False if the solver stopped at ``k_limit`` eigenpairs that were all
        negative; ``moment`` is then a lower bound for the full moment.
    """
    eigenvalues: np.ndarray
    count: int
    moment: float
    residuals: np.ndarray
    converged: bool
    eps_count: float
    vectors: np.ndarray = None
    method: str = ""
    complete: bool = True


def negative_spectrum(op, k_max=None, tol=1e-10, eps_count=None, vectors=False,
                      max_retries=8, dense_limit=DENSE_LIMIT, seed=0, k_limit=None):
    """Eigenvalues of ``op`` below ``-eps_count``.

    Parameters
    ----------
    op : GridOperator
    k_max : int, optional
        Initial number of Lanczos eigenpairs; doubled while all of them are
        negative.
    tol : float
        Relative Lanczos tolerance.
    eps_count : float, optional
        Counting threshold; ``1e-9 * max|V_p|`` by default.
    vectors : bool
        Keep the eigenvectors.
    dense_limit : int
        Largest lattice size diagonalized densely.
    k_limit : int, optional
        Stop doubling at this many Lanczos eigenpairs and return a partial
        result (``complete=False``) if they are all negative.

    Raises
    ------
    ConvergenceError
        If Lanczos fails after the retry budget.
    """
    g = op.grid
    N = g.size
    if eps_count is None:
        eps_count = 1e-9 * op.vmax
    if op.vmax == 0 and np.min(op.kinetic) >= 0:
        return SpectrumResult(np.empty(0), 0, 0.0, np.empty(0), True, eps_count,
                              np.empty((N, 0)) if vectors else None, "trivial")
    if N <= dense_limit:
        A = _dense(op)
        w, v = linalg.eigh(A)
        keep = w < -eps_count
        w, v = w[keep], v[:, keep]
        res = np.linalg.norm(A @ v - v * w, axis=0) if w.size else np.empty(0)
        return SpectrumResult(w, int(w.size), float(np.sum(-w)), res, True, eps_count,
                              v if vectors else None, "dense")
    dtype = float if op.real else complex
    lin = LinearOperator((N, N), dtype=dtype,
                         matvec=lambda x: apply(op, x.reshape(g.shape)).ravel())
    k = int(k_max or 16)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N)
    for _ in range(max_retries):
        k = min(k, N - 2)
        try:
            w, v = eigsh(lin, k=k, which="SA", tol=tol, v0=v0,
                         ncv=min(N - 1, max(2 * k + 1, k + 32)), maxiter=50 * N)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for k={k}") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        keep = w < -eps_count
        partial = bool(keep.all() and k_limit is not None and k >= k_limit)
        if keep.all() and k < N - 2 and not partial:
            k *= 2
            continue
        w, v = w[keep], v[:, keep]
        res = np.array([np.linalg.norm(lin.matvec(v[:, i]) - w[i] * v[:, i])
                        for i in range(w.size)])
        return SpectrumResult(w, int(w.size), float(np.sum(-w)), res, True, eps_count,
                              v if vectors else None, "lanczos", not partial)
    raise ConvergenceError("negative spectrum saturated every retry")


def count_below(op, u):
    """Number of eigenvalues below ``-u`` from the inertia of ``Q + u`` (dense only)."""
    if op.grid.size > DENSE_LIMIT:
        raise ValueError("inertia counting needs a dense-size lattice")
    A = _dense(op)
    A[np.diag_indices_from(A)] += u
    _, D, _ = linalg.ldl(A, hermitian=True)
    n = 0
    i = 0
    m = D.shape[0]
    while i < m:
        if i + 1 < m and D[i + 1, i] != 0:
            n += int(np.sum(np.linalg.eigvalsh(D[i:i + 2, i:i + 2]) < 0))
            i += 2
        else:
            n += int(D[i, i].real < 0)
            i += 1
    return n


def _bs_factors(V, params, grid, eps_reg, shift):
    Vp = _as_pair_frame(V, params)
    a = np.sqrt(np.maximum(Vp.at(grid.points()), 0.0))
    Hk = symbol_h(grid.momenta(), params) + eps_reg + shift
    if np.min(Hk) <= 0:
        raise ValueError("multiplier vanishes on the lattice; increase eps_reg")
    return a, Hk ** -0.5


def bs_singular_values(V, params, grid, n_svals=None, eps_reg=1e-6, shift=0.0):
    """Singular values of ``a(x) b(i grad)`` with ``a = sqrt(V_p)``, ``b = (H_p + eps)^(-1/2)``.

    ``shift`` is added to the regularized multiplier so that counts of
    singular values above one match eigenvalue counts below ``-shift``.
    """
    if grid.size > DENSE_LIMIT:
        raise ValueError("singular values are computed on dense-size lattices only")
    a, b = _bs_factors(V, params, grid, eps_reg, shift)
    dummy = GridOperator(grid, params, b, np.zeros(grid.shape), "h", False)
    B = _dense(dummy, multiplier=b, with_potential=False)
    E = a.ravel()[:, None] * B
    s = linalg.svdvals(E)
    return s if n_svals is None else s[:n_svals]


def product_symbol(V, params, grid, eps_reg=1e-6, shift=0.0):
    """Lattice samples of ``a(x) b(xi)`` as a step function on phase-space cells."""
    a, b = _bs_factors(V, params, grid, eps_reg, shift)
    return DiscreteFn(np.outer(a.ravel(), b.ravel()), grid.cell_measure)


# -- Hessian bounds and coherent states ----------------------------------------

def _hessians(f, spacing):
    f = np.asarray(f, dtype=float)
    d = f.ndim
    h = np.broadcast_to(np.asarray(spacing, dtype=float), (d,))
    core = tuple(slice(1, -1) for _ in range(d))
    Hm = np.zeros(f[core].shape + (d, d))

    def sl(shifts):
        return tuple(slice(1 + s, f.shape[k] - 1 + s) for k, s in enumerate(shifts))

    for k in range(d):
        e = [0] * d
        e[k] = 1
        em = [-x for x in e]
        Hm[..., k, k] = (f[sl(e)] - 2 * f[core] + f[sl(em)]) / h[k] ** 2
        for l in range(k + 1, d):
            pp = [0] * d; pp[k] = 1; pp[l] = 1
            pm = [0] * d; pm[k] = 1; pm[l] = -1
            mp = [0] * d; mp[k] = -1; mp[l] = 1
            mm = [0] * d; mm[k] = -1; mm[l] = -1
            v = (f[sl(pp)] - f[sl(pm)] - f[sl(mp)] + f[sl(mm)]) / (4 * h[k] * h[l])
            Hm[..., k, l] = v
            Hm[..., l, k] = v
    return Hm


def hessian_sup(f, spacing):
    """Largest spectral norm of the central-difference Hessian over interior points.

    Parameters
    ----------
    f : ndarray
        Samples on a uniform ``d``-dimensional grid.
    spacing : float or sequence of float
        Grid spacing per axis.
    """
    Hm = _hessians(f, spacing)
    if Hm.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(Hm))))


def axial_hessian_sup(f2, h_eta, h_rho, d):
    """Hessian bound of an axially symmetric function from a meridian slice.

    ``f2[i, j] = f(eta_i, rho_j)`` with ``rho_j = j * h_rho`` (``j >= 0``).
    In ``d >= 3`` the Hessian has the meridian block plus the eigenvalue
    ``f_rho / rho`` of multiplicity ``d - 2``.
    """
    f2 = np.asarray(f2, dtype=float)
    if d == 1:
        return hessian_sup(f2[:, 0], h_eta)
    full = np.concatenate([f2[:, :0:-1], f2], axis=1)
    best = hessian_sup(full, (h_eta, h_rho))
    if d >= 3:
        rho = h_rho * np.arange(1, f2.shape[1] - 1)
        fr = (f2[1:-1, 2:] - f2[1:-1, :-2]) / (2 * h_rho)
        best = max(best, float(np.max(np.abs(fr / rho))))
    return best


def symbol_theta(params, d, r, mode="H", delta=None, pts_per_r=16, margin=3.0,
                 quad_tol=1e-7):
    """Hessian bound of the smoothed symbol near the segment joining the centers.

    The symbol is sampled on a meridian slice covering ``margin * r``
    around both smoothing balls; outside this region the unsmoothed Hessian
    is bounded by ``1/T_+ + 1/T_- <= 2 / (margin r)``, which is also
    included.
    """
    scale = 1.0 if mode == "H" else 1.0 / (1.0 - delta)
    lo = -params.mu_minus * scale - margin * r
    hi = params.mu_plus * scale + margin * r
    h = r / pts_per_r
    eta = np.arange(lo, hi + h, h)
    rho = np.arange(0, margin * r + 2 * h, h)
    E, R = np.meshgrid(eta, rho, indexing="ij")
    xi = np.zeros(E.shape + (d,))
    xi[..., 0] = E
    if d > 1:
        xi[..., 1] = R
        f2 = smooth_symbol(xi, r, params, mode, delta=delta, quad_tol=quad_tol)
    else:
        f2 = smooth_symbol(xi[:, :1], r, params, mode, delta=delta, quad_tol=quad_tol)
    outside = 2.0 / (margin * r)
    return max(axial_hessian_sup(f2, h, h, d), outside)


def potential_theta(V, d=None, h=None, n=4001):
    """Hessian bound of a radial potential from its meridian slice."""
    d = d or V.d
    R = V.tail.radius if V.tail.kind == "compact" else 4 * V.tail.radius
    h = h or R / (n // 2)
    eta = np.arange(-R - 2 * h, R + 3 * h, h)
    if d == 1:
        return hessian_sup(V(np.abs(eta)), h)
    rho = np.arange(0, R + 3 * h, h)
    E, Rh = np.meshgrid(eta, rho, indexing="ij")
    return axial_hessian_sup(V(np.hypot(E, Rh)), h, h, d)


def coherent_kappa(f, theta_J, theta_W):
    """Coherent-state error ``2 sqrt(theta_J theta_W) |x f| |grad f|``."""
    if theta_J < 0 or theta_W < 0:
        raise ValueError("Hessian bounds must be nonnegative")
    return 2.0 * np.sqrt(theta_J * theta_W) * f.x_moment * f.grad_moment


# -- Berezin-Lieb sandwich -----------------------------------------------------

def _ball_correction(params, d, r, mode, delta, w_values, n_s=48, n_phi=48, quad_tol=1e-7):
    """``int over balls of (w - J0)_+ - (w - J)_+`` for each ``w``.

    ``J0`` is the unsmoothed and ``J`` the smoothed symbol; the balls are
    integrated in polar coordinates on a meridian half plane.
    """
    scale = 1.0 if mode == "H" else 1.0 / (1.0 - delta)
    s, ws = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * r * (s + 1)
    ws = 0.5 * r * ws
    out = np.zeros_like(np.asarray(w_values, dtype=float))
    for sign in (1, -1):
        c = sign * params.mu(sign) * scale
        if d == 1:
            eta = np.concatenate([c + s, c - s])
            wts = np.concatenate([ws, ws])
            xi = eta[:, None]
        else:
            ph, wp = np.polynomial.legendre.leggauss(n_phi)
            ph = 0.5 * np.pi * (ph + 1)
            wp = 0.5 * np.pi * wp
            S, P = np.meshgrid(s, ph, indexing="ij")
            eta = c + S * np.cos(P)
            rho = S * np.sin(P)
            surf = 2 * np.pi ** ((d - 1) / 2) / _gamma((d - 1) / 2)
            wts = (np.outer(ws, wp) * S * rho ** (d - 2) * surf).ravel()
            xi = np.zeros((eta.size, d))
            xi[:, 0] = eta.ravel()
            xi[:, 1] = rho.ravel()
        if mode == "H":
            J0 = symbol_h(xi, params)
        else:
            J0 = symbol_g(xi, params, delta)
        J = smooth_symbol(xi, r, params, mode, delta=delta, quad_tol=quad_tol)
        w = np.asarray(w_values, dtype=float)[..., None]
        out += np.sum(wts * (np.maximum(w - J0, 0) - np.maximum(w - J, 0)), axis=-1)
    return out


def _gamma(x):
    from scipy.special import gamma
    return gamma(x)


def phase_average_negative(V, params, r, kappa=0.0, mode="H", delta=None,
                           n_radial=400, quad_tol=1e-7):
    """``(2 pi)^-d int int (J(xi) - V_p(y) + kappa)_- dxi dy`` for a smoothed symbol ``J``.

    Uses ``int (w - H_p)_+ dxi = (2 pi)^d Phi(w)`` and corrects inside the
    smoothing balls.
    """
    d = V.d
    Vp = _as_pair_frame(V, params)
    R = Vp.support_radius(kappa) if kappa > 0 else Vp.tail.radius
    if not np.isfinite(R) or R <= 0:
        return 0.0
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    # split the radial range at the pair-frame knots
    edges = sorted(set([0.0, R] + [k for k in Vp.knots if 0 < k < R]))
    rr, wr = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        rr.append(0.5 * (b - a) * (x + 1) + a)
        wr.append(0.5 * (b - a) * wx)
    rr, wr = np.concatenate(rr), np.concatenate(wr)
    w = Vp(rr) - kappa
    pos = w > 0
    phi = np.zeros_like(w)
    phi[pos] = lambda_moment(w[pos], params, d, rtol=1e-10)
    dil = 1.0 if mode == "H" else 1.0 / (1.0 - delta)
    corr = np.zeros_like(w)
    corr[pos] = _ball_correction(params, d, r, mode, delta, w[pos], quad_tol=quad_tol)
    inner = dil * phi - corr / (2 * np.pi) ** d
    surf = d * ball_volume(d)
    return float(surf * np.sum(wr * inner * rr ** (d - 1)))


@dataclass
class SandwichResult:
    lower: float
    spectral: float
    upper_defect: float
    kappa: float
    theta_J: float
    theta_W: float
    upper: float = None
    info: dict = field(default_factory=dict)


def berezin_sandwich(V, params, grid, r, f=None, spectrum=None, delta=None,
                     upper=False, theta_J=None, quad_tol=1e-7):
    """Coherent-state lower bound, lattice moment and optional upper bound.

    Parameters
    ----------
    V : Potential
        Unscaled potential.
    params : PhysParams
    grid : GridSpec
    r : float
        Smoothing radius.
    f : MollifierSpec, optional
        Coherent profile; the L2-normalized bump by default.
    spectrum : SpectrumResult, optional
        Precomputed lattice spectrum of the plain operator.
    delta : float, optional
        Dilation for the upper bound.
    upper : bool
        Also evaluate the upper bound with the dilated smoothed symbol.
    theta_J : float, optional
        Precomputed Hessian bound of the smoothed symbol.

    Returns
    -------
    SandwichResult
        ``upper_defect = upper - spectral`` (``nan`` unless ``upper``).
    """
    params.require_relativistic()
    d = V.d
    f = f or coherent_bump(d)
    Vp = _as_pair_frame(V, params)
    if Vp.sup <= 0:
        return SandwichResult(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    if spectrum is None:
        spectrum = negative_spectrum(build_operator(V, params, grid))
    tJ = theta_J if theta_J is not None else symbol_theta(params, d, r, "H", quad_tol=quad_tol)
    tW = potential_theta(Vp)
    kappa = coherent_kappa(f, tJ, tW)
    lower = phase_average_negative(V, params, r, kappa, "H", quad_tol=quad_tol)
    res = SandwichResult(lower, spectrum.moment, np.nan, kappa, tJ, tW)
    if upper:
        if delta is None:
            raise ValueError("upper bound needs delta")
        tG = symbol_theta(params, d, r, "G", delta=delta, quad_tol=quad_tol)
        kG = coherent_kappa(f, tG, tW)
        opG = build_operator(V, params, grid, "g-sigma", r=r, delta=delta, quad_tol=quad_tol)
        specG = negative_spectrum(opG)
        theta_term = float(np.sum(np.minimum(kG, -specG.eigenvalues)))
        avg = phase_average_negative(V, params, r, 0.0, "G", delta=delta, quad_tol=quad_tol)
        res.upper = avg + theta_term
        res.upper_defect = res.upper - spectrum.moment
        res.info.update(kappa_G=kG, theta_G=tG, theta_term=theta_term)
    return res


def local_density(U, V, params, grid, spectrum=None):
    """``sum_n <U(y/p) psi_n, psi_n>`` over the negative eigenfunctions.

    ``U`` is a callable on points of shape ``(..., d)`` or a `Potential`.
    """
    if spectrum is None or spectrum.vectors is None:
        spectrum = negative_spectrum(build_operator(V, params, grid), vectors=True)
    if spectrum.count == 0:
        return 0.0
    y = grid.points() / params.p
    u = U.at(y) if isinstance(U, Potential) else np.asarray(U(y), dtype=float)
    dens = np.sum(np.abs(spectrum.vectors) ** 2, axis=1)
    return float(np.sum(u.ravel() * dens))

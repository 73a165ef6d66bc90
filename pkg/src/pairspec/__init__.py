"""
Negative spectrum of a pseudo-relativistic two-body operator.

The pair operator ``Q_p = H_p(i grad) - V_p(y)`` couples two particles of
masses ``m_+`` and ``m_-`` through a radial potential.  The package
evaluates its kinetic symbol, the classical phase-space counterparts of
the eigenvalue count and moment, the rearrangement functionals entering
the bounds, and lattice spectra of the operator itself.

Modules
-------
symbol       kinetic symbol, dilated and smoothed variants
potential    radial potentials, pair-frame scaling, Lebesgue norms
phasespace   phase-space density, volumes and asymptotic constants
rearrange    distribution functions, rearrangements, weak quasinorms
bounds       counting and moment bound right-hand sides
spectral     lattice operator, negative spectrum, coherent-state bounds
cli          sweeps and reports
"""
from .errors import (PairspecError, RegimeError, DivergenceError, QuadratureError,
                     ConvergenceError)
from .symbol import (PhysParams, symbol_h, symbol_g, symbol_massless, kinetic_t,
                     momentum, smooth_symbol, mollifier_scale, symbol_bump,
                     coherent_bump, momentum_window_check, admissible_c, ball_volume)
from .potential import (Potential, ScaledPotential, model_potential, gaussian_potential,
                        smooth_well, table_potential, radial_potential, load_radial_table,
                        scale_to_pair_frame, lq_norm, radial_integral)
from .phasespace import (lambda_closed, lambda_mc, lambda_moment, phase_space, xi_p,
                         sigma_p, nu_q, classify_region, special_L, special_K,
                         special_L_closed, special_K_nested, asym_leading)
from .rearrange import (distribution_fn, rearrangement, rearrange_potential,
                        weak_quasinorm, q_average, asym_functionals, DiscreteFn)
from .bounds import (clr_rhs, lt_rhs, cwikel_sval_bound, bs_count_bound, clr_classical,
                     aizenman_lieb, default_constants)
from .spectral import (GridSpec, build_operator, apply, negative_spectrum, count_below,
                       bs_singular_values, product_symbol, hessian_sup, coherent_kappa,
                       berezin_sandwich, local_density)

__version__ = "0.1.0"

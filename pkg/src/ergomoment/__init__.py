"""Fourth moments of partial sums for geometrically ergodic Markov chains and expanding maps.

Modules
-------
core        models, observables, stationary norm profiles, ergodicity certificates
systems     example chains, interval maps, subshifts, linear/AR/Lipschitz samplers
spectral    spectral gap, decay constants, Ulam discretisation
oracle      exact moments on finite chains
montecarlo  seeded replicate estimates
verify      bound evaluation, proof ledger, CLT and tightness diagnostics
cli         command line runner
"""

__version__ = "0.1.0"

from .core import (ErgodicityCertificate, FiniteMarkovModel, ModelError, NoMeasureError, NormKind,
                   NormProfile, NotStochasticError, Observable, Quadrature, center, conjugate,
                   function_norm, midpoint_quadrature, norm_profile)
from .montecarlo import MCEstimate, estimate_indicator_s4, estimate_s4
from .oracle import (MomentOracle, exact_covariance, exact_cross_moment, exact_fourth_moment,
                     exact_fourth_moments, green_kubo_sigma2, path_enumeration_fourth_moment)
from .spectral import (ClosureError, NoSpectralGapError, NotStronglyErgodicError, stationary,
                       subdominant_radius, theta_kappa, ulam)
from .systems import (NotContractingError, StationarySampler, ar_model, build_system, doeblin_chain,
                      expanding_map, iid_chain, linear_process, random_lipschitz, subshift)
from .verify import (clt_check, empirical_tightness, hat_sweep, proof_ledger, rhs_corollary,
                     rhs_theorem1, verify_bound)

"""twistdiff: diffusion certification for random near-integrable twist maps.

Random compositions of two twist maps of the cylinder are iterated over
n ~ s / eps^2 steps; the action displacement converges to a diffusion
whose drift b(r) and variance sigma^2(r) are computed here exactly from
the normal form of the expected map.  The package bundles the map
iteration kernels (compiled + pure-numpy fallback), the resonance-strip
arithmetic, the Monte-Carlo engine and the statistical certification
layer behind the ``twistdiff`` command-line tool.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND, available_backends
from .arithmetic import (StripParams, StripClass, best_rational,
                         birkhoff_deviation, classify, ergodization_time,
                         ir_intervals, ir_measure, is_ti_admissible)
from .dynamics import MapSystem, State, Word, expected_step, iterate, step
from .ensemble import (EnsembleSpec, EnsembleResult, WalkLattice,
                       calibrate_lattice, exit_time_experiment,
                       hitting_probability, run_ensemble, run_exit_batch,
                       visit_census, walk_calibration_experiment)
from .errors import (AmbiguousClass, ConfigError, DegenerateVariance,
                     IllConditioned, InsufficientSamples, IOFailure,
                     NonFiniteState, NotTIAdmissible, ResonantInput,
                     TwistdiffError)
from .normal_form import (GeneratingFunction, NormalFormData,
                          NormalFormParams, build_normal_form, bump_mu,
                          conjugacy_residual, correction_fields, drift_b,
                          e2_field, homological_residual,
                          near_conjugacy_residual, phi, phi_inverse,
                          s1_coefficient)
from .potentials import (SystemPotentials, TrigPotential, check_hypotheses,
                         sigma_squared)
from .stats import (CLTReport, clt_test, emit_histogram, golden_weights,
                    ks_statistic, martingale_residual, test_functions,
                    weighted_bernoulli_clt)
from .systems import (cos_sin_system, constant_w_system, exact_potentials,
                      random_exact_system, random_system)

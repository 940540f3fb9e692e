"""Workbench for LWE-decision experiments over q-ary lattices.

Pipeline: kernel vectors of A^T over Z_q span a lattice together with
q*I; basis reduction and enumeration find short vectors; spin encodings
turn the basis into a diagonal Hamiltonian whose energies are squared
vector norms; a QAOA simulator searches its low-energy states; and the
inner product <v, c> mod q drives the structured-vs-uniform decision.
"""

__version__ = "0.1.0"

from .errors import (CapacityError, DegenerateDataError, LwekitError,
                     MembershipError, NotFoundError, ParameterError, RankError)
from .modq import ModMatrix, centered, is_prime, kernel_mod_q, rank_mod_q, reduce_centered
from .lattice import (GramSchmidtData, LatticeBasis, QubitBudget, bkz_reduce,
                      build_sis_lattice, coefficients_in_basis, gram_schmidt,
                      hermite_normal_form, is_lll_reduced, lll_reduce,
                      qubit_budget, recommended_block_size, representable,
                      svp_enumerate)
from .ising import (DecodedState, IsingHamiltonian, SpinEncoding, decode,
                    encode_nonzero, encode_symmetric, export_diagonal,
                    hamiltonian_diagonal)
from .qaoa import (OptimizerConfig, QaoaParams, TrajectoryPoint, apply_mixer,
                   apply_phase, default_scale, descend, expectation,
                   finite_diff_gradient, gradient_descent, landscape_scan,
                   run_qaoa, sample, uniform_state)
from .lwe import (DecisionReport, LweInstance, LweParams, PipelineResult,
                  QaoaSolverConfig, RegisterStudy, decide,
                  folded_gaussian_advantage, folded_gaussian_probs,
                  gaussian_support, gen_instance, inner_product_mod_q,
                  instance_rng, model_threshold, monte_carlo,
                  optimize_threshold, qaoa_enhancement, required_vector_norm,
                  run_pipeline, sample_discrete_gaussian, significance_check,
                  wilson_interval)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Dissipating state feedback: given (A, B), find K with Sym(A - BK) <= 0.

Feasibility checks, direct constructors, a minimal Frobenius-norm solver
based on a two-level gradient flow, field-of-values tools and benchmark
generators.
"""

__version__ = "0.1.0"

from .exceptions import (AlphaConditionViolated, AlreadyDissipative, DissipatorError,  # noqa: E402
                         GenerationFailed, InvalidInput, NoFlatSegment, NoPositivePart,
                         NotDissipatable, NotPositiveDefinite, PreconditionViolated,
                         RankDeficient, SingularSystem, StagnatedStep)
from .model import (ControlPair, Dissipativity, FeedbackResult, is_dissipatable,  # noqa: E402
                    lmi_residuals, rank_lower_bound_check, saddle_inertia, saddle_matrix,
                    verify_dissipating, zero_multiplicity_check)
from .constructors import (block_parametrized_feedback, pencil_feedback,  # noqa: E402
                           pencil_minimize, shift_for_strictness, shrink_to_weak,
                           skelton_counterexample, skelton_feedback, skelton_params,
                           spectral_feedback)
from .gradient_flow import functional, inner_minimize, limit_structure_check, outer_solve  # noqa: E402
from .fov import flat_segment, fov_boundary, numerical_abscissa  # noqa: E402
from .bench import ProblemSpec, example1, example1b  # noqa: E402

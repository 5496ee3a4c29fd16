"""Continuous-time GARCH(p, q) processes: simulation, conditions and moments."""
__version__ = "0.1.0"

from .errors import (CogarchError, ConditionFailed, DegenerateSpectrum, IllConditioned,
                     InvariantBreach, NonConvergence, NotApplicable, NumericOverflow,
                     SingularMatrix, ValidationError)
from .levy import JumpDist, LevyDriver, sample_jumps
from .model import CogarchParams, ModelMatrices, build_model, mean_corrected
from .conditions import (check_initial_state, check_moment, check_positivity,
                         check_stationarity)
from .moments import (acvf_V, cov_state, estimate_Hr, increment_moments, m_value,
                      mean_state, moment_report, sq_increment_acvf, stationary_v_moments)
from .simulate import (cogarch11_reference, sample_grid, simulate_path, stationary_init,
                       step_recurrence)
from .stats import compare_acvf, sample_acf

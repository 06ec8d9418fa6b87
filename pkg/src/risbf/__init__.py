"""Reflecting-surface hybrid beamforming simulator.

Builds seeded geometric channels through a programmable reflecting surface,
optimizes the downlink sum rate by alternating zero-forcing digital precoding
with an exact mixed-integer search over the discrete surface phases, and
ships the baselines and sweep tooling used to study the design trade-offs.
"""

from .analog import (PhaseSearchResult, SingularMatrixError, build_phase_model,
                     inverse_gram_trace, min_epigraph_weight, optimize_phases)
from .baselines import (AnnealSchedule, continuous_phase_ascent,
                        random_phase_search, simulated_annealing)
from .channel import (ChannelTensor, PhaseIndexMatrix, assemble_f, q_of_theta,
                      synthesize_channel, user_rates)
from .codebook import (GramExpansion, PhaseCodebook, gram_affine_expansion,
                       pair_grams)
from .config import (GeometrySolution, SystemConfig, build_geometry,
                     default_config, half_circle_user_placement, load_config,
                     save_config)
from .digital import (RankDeficientError, ZfSolution, digital_beamforming,
                      water_filling, zf_precoder)
from .driver import SumRateTrace, maximize_sum_rate
from .los import (build_los_report, fully_digital_achievability,
                  orthogonality_residual, required_antenna_separation,
                  ris_size_threshold)
from .milp import (Cut, LpProblem, MilpModel, MilpResult, solve_lp, solve_milp)
from .sweep import SweepSpec, emit_outputs, run_sweep

__version__ = "0.1.0"

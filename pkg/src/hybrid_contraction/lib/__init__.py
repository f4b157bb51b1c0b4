from .config import ORACLE_INTEGRATOR
from .config import BoxRegion
from .config import DistanceOptions
from .config import GuardPoint
from .config import IntegratorOptions
from .config import RunConfig
from .config import SamplingPlan
from .config import box
from .config import transition_label
from .contraction import ContractionCertificate
from .contraction import DwellEnvelope
from .contraction import ExperimentReport
from .contraction import Verdict
from .contraction import certificate_rows
from .contraction import certify
from .contraction import certify_flow
from .contraction import certify_parameter_draws
from .contraction import certify_resets
from .contraction import check_switching_surface
from .contraction import check_translation_reset
from .contraction import envelope_bound
from .contraction import experiment_rows
from .contraction import pairwise_contraction_experiment
from .contraction import squared_distance_rate
from .distance import DistanceEstimate
from .distance import Exactness
from .distance import PathCandidate
from .distance import PathJump
from .distance import PathSegment
from .distance import concatenate_paths
from .distance import distance
from .distance import path_length
from .elementary import make_example1
from .elementary import make_moving_guard_toy
from .elementary import make_periodic_kick
from .elementary import make_time_varying_reset
from .exceptions import ConfigurationError
from .exceptions import DimensionMismatchError
from .exceptions import EvaluatorError
from .exceptions import EventSequenceMismatchError
from .exceptions import ExpressionError
from .exceptions import GrazingError
from .exceptions import HybridSystemError
from .exceptions import InvalidPathError
from .exceptions import NotPositiveDefiniteError
from .exceptions import OffGuardError
from .exceptions import RankDeficiencyError
from .exceptions import SimulationError
from .exceptions import TransversalityError
from .export import event_log
from .export import write_csv
from .export import write_json
from .export import write_trajectory_csv
from .expressions import SystemDefinition
from .expressions import build_system
from .expressions import load_system_definition
from .mechanical import ForcingInput
from .mechanical import MechanicalNetworkParams
from .mechanical import OneDofParams
from .mechanical import SoftParams
from .mechanical import TwoDofParams
from .mechanical import ViscoParams
from .mechanical import constraint_force
from .mechanical import constraint_impulse_map
from .mechanical import make_mech_1dof
from .mechanical import make_mech_2dof
from .mechanical import make_mech_network
from .mechanical import make_mech_soft
from .mechanical import make_mech_visco
from .mechanical import mechanical_energy
from .model import GuardSpec
from .model import HybridState
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import ResetSpec
from .model import Transition
from .norms import NormKind
from .norms import NormSpec
from .norms import induced_norm
from .norms import l1_norm
from .norms import l2_norm
from .norms import linf_norm
from .norms import matrix_measure
from .norms import vector_norm
from .norms import weighted_l2_norm
from .planar import make_planar_pwl
from .sampling import sample_guard_points
from .sampling import sample_mode_states
from .simulator import HybridTrajectory
from .simulator import TrajectoryStatus
from .simulator import simulate
from .simulator import time_of_impact
from .traffic import TrafficParams
from .traffic import initial_mode
from .traffic import make_traffic
from .validation import Diagnostic
from .validation import validate
from .variational import SaltationRecord
from .variational import saltation
from .variational import saltation_fd_oracle
from .variational import variational_solve

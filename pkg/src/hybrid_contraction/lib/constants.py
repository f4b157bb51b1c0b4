SYMMETRY_TOLERANCE = 1e-12
SPD_RELATIVE_EIGENVALUE_FLOOR = 1e-12
MIXED_NORM_RESTARTS = 16
MIXED_NORM_SIGN_ENUMERATION_MAX_DIM = 12

GUARD_GRADIENT_FLOOR = 1e-10
TRANSVERSALITY_TOLERANCE = 1e-10
EVENT_G_TOLERANCE = 1e-10
EVENT_TIME_TOLERANCE = 1e-12
ON_GUARD_TOLERANCE = 1e-8
IMPACT_VELOCITY_TOLERANCE = 1e-9
DEFAULT_MAX_EVENTS_PER_UNIT_TIME = 1000

FD_JACOBIAN_RELATIVE_STEP = 1e-5
JACOBIAN_CONSISTENCY_TOLERANCE = 1e-5

NONEXPANSIVE_TOLERANCE = 1e-9

DEFAULT_SEED = 0
DEFAULT_DISTANCE_DEPTH = 3
DEFAULT_DISTANCE_WAYPOINTS = 8
DEFAULT_DISTANCE_RESTARTS = 8
DISTANCE_TOLERANCE = 1e-6

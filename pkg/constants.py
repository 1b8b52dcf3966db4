import math
import os

# diagnostics level: 0 quiet, 1 stage progress, 2 per-epoch chatter
DEBUG = int(os.environ.get('RAMS_DEBUG', '1'))

# environment variable holding the output root for runs and reports
RAMS_OUTPUT_ROOT_ENV = 'RAMS_OUTPUT_ROOT'
RAMS_DEFAULT_OUTPUT_ROOT = 'runs'

# exit codes of rams.py
EXIT_OK =           0
EXIT_CELL_FAILED =  1
EXIT_CONFIG_ERROR = 2

# file formats
CHECKPOINT_MAGIC =   0x52414d53434b5054 # 'RAMSCKPT'
CHECKPOINT_VERSION = 1
DATASET_SCHEMA_VERSION = 1
RECORD_VERSION = 1

# network optimizer (Adam with lr 1e-3 for the network, 1e-2 for samples)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS =   1e-8
NETWORK_LR = 1e-3
SAMPLE_LR =  1e-2

# L-BFGS
LBFGS_HISTORY =      50
LBFGS_C1 =           1e-4
LBFGS_C2 =           0.9
LBFGS_GTOL =         1e-9
LBFGS_MAX_LS =       25
LBFGS_CURVATURE_EPS = 1e-12

# GRF Cholesky jitter ladder
GRF_JITTER_START = 1e-10
GRF_JITTER_MAX =   1e-4

# Halton dimension cap
HALTON_MAX_DIM = 16

# points closer than this to the piecewise-conductivity interface are rejected
INTERFACE_TOL = 1e-9

# physical constants of the benchmark problems
BURGERS_NU =          0.01 / math.pi
WAVE_SPEED_SQ =       4.0
POISSON_PEAK_SHARPNESS = 1000.0
POISSON_PEAK_CENTER = 0.5
POISSON_HD_SHARPNESS = 10.0
DIFFUSION_D =         0.01
REACTION_K =          0.01
DYNAMIC_D =           6.0
DYNAMIC_DIM =         8
PIECEWISE_K_INNER =   0.5
PIECEWISE_K_OUTER =   1.0
PIECEWISE_INNER_HALF = 0.3
WAVE_DISC_INTERFACE = 0.7
WAVE_DISC_C_LEFT =    1.0
WAVE_DISC_C_RIGHT =   0.5
ADVECTION_MIN_SPEED = 1e-2

# sensor grids
SENSORS_1D = 100
SENSORS_2D = 31

# names of the samplers understood by the harness
SAMPLERS = ('random', 'lhs', 'halton', 'rar_g', 'rar_d', 'r3',
            'datadriven_random', 'datadriven_rar_g')

# phases timed in every run
PHASES = ('train', 'rams', 'select', 'label', 'lbfgs', 'evaluate')

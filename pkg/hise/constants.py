# objective and momentum defaults
ALPHA = 0.9
HAL_MARGIN = 0.3  # gamma
HAL_TEMPERATURE = 0.1  # mu
LAMBDA_BATCH = 10.0
LAMBDA_BANK = 0.1
MOMENTUM = 0.995
INFONCE_TEMPERATURE = 0.05

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# desk-scale defaults
LEARNING_RATE = 1e-4
BATCH_SIZE = 16
BANK_CAPACITY = 128
EPOCHS = 200
PAIRS = 64
D_MODEL = 32
D_FRAME = 16
D_ROI = 8
TOP_K = 8
CONF_THRESHOLD = 0.5
NUM_ROLES = 3
MAX_TEXT_LEN = 16
MAX_FRAMES = 8
FRAMES_PER_VIDEO = 4
NOISE_SIGMA = 0.1
DISTRACTORS_PER_FRAME = 2

# synthetic role ids for the "subject action object place" template
ROLE_AGENT = 0
ROLE_PATIENT = 1
ROLE_LOCATION = 2

RECALL_KS = (1, 5, 10)
UNIT_NORM_TOLERANCE = 1e-9

SEED_ENV_VAR = "HISE_SEED"
LOG_LEVEL_ENV_VAR = "LOG_LEVEL"

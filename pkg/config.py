"""
Project configuration and constants.

Centralizes all configurable parameters for the teeth restoration pipeline.
"""

import os

# -----------------------------------------------------------------------------
# Directory Paths
# -----------------------------------------------------------------------------

# Project root directory (where this file is located)
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))

# Results directory (checkpoints, reports, plots)
RESULTS_DIR = os.path.join(PROJECT_ROOT, "results")

# Training configs
CONFIGS_DIR = os.path.join(PROJECT_ROOT, "configs")

# Default training config file
DEFAULT_TRAIN_CONFIG = os.path.join(CONFIGS_DIR, "train_default.yaml")

# -----------------------------------------------------------------------------
# Frame / Landmark Directories
# -----------------------------------------------------------------------------

# Lossless image formats accepted as frames
FRAME_EXTENSIONS = (".png", ".bmp", ".tif", ".tiff")

# Landmark sidecar extension (one file per frame, 68 lines of "x y")
LANDMARK_EXTENSION = ".txt"

# -----------------------------------------------------------------------------
# Mouth Geometry
# -----------------------------------------------------------------------------

# 68-point iBUG landmark convention
LANDMARK_COUNT = 68
MOUTH_LEFT_INDEX = 48
MOUTH_RIGHT_INDEX = 54
NOSE_TIP_INDEX = 33
JAW_INDEX = 8
OUTER_LIP_INDICES = tuple(range(48, 60))
INNER_LIP_INDICES = tuple(range(60, 68))

# Model input / output resolution (square)
CROP_SIZE = 96

# Crop extent beyond the four keypoints, as a fraction of mouth width.
# Horizontal margin keeps the mouth corners off the crop edge.
CROP_MARGIN_X = 0.1
CROP_MARGIN_Y = 0.0

# Feather width (source pixels) used when pasting restored crops back
PASTE_BLEND_WIDTH = 4

# -----------------------------------------------------------------------------
# Model Configuration
# -----------------------------------------------------------------------------

BASE_CHANNELS = 64

# Stride-2 stages per FGFF encoder (96 -> 48 -> 24 -> 12)
FGFF_STAGES = 3

LEAKY_RELU_SLOPE = 0.2

# Patch discriminator: 96 -> 48 -> 24 -> 12 -> 6
DISCRIMINATOR_STAGES = 4

OUTPUT_ACTIVATIONS = ("tanh_rescaled",)

# Sanity bound for the default generator (real-time positioning)
MAX_GENERATOR_PARAMETERS = 25_000_000

# -----------------------------------------------------------------------------
# Loss Configuration
# -----------------------------------------------------------------------------

LAMBDA_GAN = 0.1
LAMBDA_PERC = 1.0
LAMBDA_REC = 10.0

# Perceptual feature extractor: "vgg16" (pretrained) or "toy" (random, frozen)
FEATURE_EXTRACTOR = "vgg16"

# Seed for the toy extractor's fixed random weights
TOY_EXTRACTOR_SEED = 1234

# -----------------------------------------------------------------------------
# Training Configuration
# -----------------------------------------------------------------------------

LEARNING_RATE = 1e-4
BATCH_SIZE = 12
TRAIN_STEPS = 1000
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
SEED = 42

# Environment variable overriding the config seed
SEED_ENV_VAR = "HDTR_SEED"

# Synthetic toy dataset (used when no frame directory is configured)
TOY_FRAMES = 16
TOY_FRAME_SIZE = (128, 128)

CHECKPOINT_EVERY = 500
CHECKPOINT_MAGIC = "HDTR1"

# -----------------------------------------------------------------------------
# Inference Configuration
# -----------------------------------------------------------------------------

REFERENCE_POLICIES = ("previous_output", "fixed_frame", "self")
DEFAULT_REFERENCE_POLICY = "previous_output"

# -----------------------------------------------------------------------------
# Sharpness Metrics
# -----------------------------------------------------------------------------

# Report column order
METRIC_NAMES = (
    "brenner",
    "laplacian",
    "smd",
    "smd2",
    "variance",
    "energy",
    "vollath",
    "entropy",
)

# Y = 0.299 R + 0.587 G + 0.114 B
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

ENTROPY_BINS = 256

# Worker threads for scoring frames
METRIC_WORKERS = 4

# -----------------------------------------------------------------------------
# Benchmark Configuration
# -----------------------------------------------------------------------------

BENCH_ITERS = 100
BENCH_WARMUP = 10

# -----------------------------------------------------------------------------
# Ablation Study
# -----------------------------------------------------------------------------

# Training steps per ablation condition
ABLATION_STEPS = 200

# Frames in the toy video each condition trains on and restores
ABLATION_FRAMES = 16

# -----------------------------------------------------------------------------
# Logging Configuration
# -----------------------------------------------------------------------------

# Log level: DEBUG, INFO, WARNING, ERROR, CRITICAL
LOG_LEVEL = os.environ.get("HDTR_LOG_LEVEL", "INFO")

# Log to file (in addition to console)
LOG_TO_FILE = False

# Log file path (only used if LOG_TO_FILE is True)
LOG_FILE_PATH = os.path.join(PROJECT_ROOT, "hdtr.log")

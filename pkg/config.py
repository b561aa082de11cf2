# config.py

import math
import os

from dotenv import load_dotenv

load_dotenv()

# Operational settings (environment / .env)
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "runs")
ANALYSIS_WORKERS = int(os.getenv("ANALYSIS_WORKERS", "4"))
HOST = os.getenv("HOST", "127.0.0.1")
PORT = int(os.getenv("PORT", "8000"))
AUTH_CODE = os.getenv("AUTH_CODE", "")  # empty -> API endpoints are open

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Curvature pipeline constants. These are fixed, not read from the environment.
RESAMPLE_POINTS = 500
SMOOTHING_SPAN = 30
CURVATURE_OFFSET = 10
DEFAULT_UNITS = "m"

# Experiment metadata
PRESSURE_KPA = 310.0
SNAKE_FPS = 120.0
ROBOT_FPS = 60.0

# Body regions as arc fractions: head [0, 0.25), mid [0.25, 0.75), tail [0.75, 1]
HEAD_END_FRACTION = 0.25
TAIL_START_FRACTION = 0.75

# Fabrication defaults
RELAXED_RADIUS_M = 0.00475  # 0.95 cm inner-diameter latex tubing
BODY_LENGTH_M = 0.40
STRAIGHT_FIBER_ANGLE_DEG = 67.5
KINK_FIBER_ANGLE_DEG = 89.0
KINK_FRACTION = 0.3
KINK_LEAD_IN_FRACTION = 0.1  # straight stretch of the head before the kink
KINK_SWEEP_RAD = math.radians(120.0)
MIDSECTION_SWEEP_RAD = math.radians(120.0)
COIL_SWEEP_RAD = 2.0 * math.pi
DEFAULT_MIDSECTION = "U"

# Simulation defaults
SIMULATION_SAMPLES = 2000

"""
Constants - Household load statistics and instrument accuracy
"""

# Standard deviation of the one-sample increment of an aggregate of five
# houses, keyed by sampling frequency in Hz.
LOAD_INCREMENT_SD_KW = {
    1.0: 0.184,
    0.2: 0.425,
    0.1: 0.604,
}

AGGREGATE_PEAK_KW = 27.229
HOUSES_PER_BUS = 5

TVE_BOUND = 0.0005
PT_BIAS_MAX = 0.003

DEFAULT_FREQUENCY = 0.1
WINDOW_SECONDS = 1000.0
DEFAULT_RUNS = 1000


def window_samples(frequency: float, seconds: float = WINDOW_SECONDS) -> int:
    """Samples in a measurement window at the given sampling frequency"""
    if frequency <= 0:
        raise ValueError(f"Sampling frequency must be positive, got {frequency:g}")
    return max(2, round(seconds * frequency))


def relative_load_sd(frequency: float) -> float:
    """Increment SD as a fraction of the aggregate peak"""
    if frequency not in LOAD_INCREMENT_SD_KW:
        known = ", ".join(f"{f:g}" for f in sorted(LOAD_INCREMENT_SD_KW))
        raise ValueError(f"No load statistics at {frequency:g} Hz (known: {known})")
    return LOAD_INCREMENT_SD_KW[frequency] / AGGREGATE_PEAK_KW

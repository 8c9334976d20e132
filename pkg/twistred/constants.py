from enum import Enum

PRECISION = "complex128"

# sample sizes used by the built-in scenarios unless overridden
DEFAULT_POINTS = 50
DEFAULT_TRIALS = 20
DEFAULT_CHECK_POINTS = 10


class ExitCode(int, Enum):
    OK = 0
    INFRASTRUCTURE = 1
    VERIFICATION_FAILED = 2

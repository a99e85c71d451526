__version__ = "0.1.0"

#
# Defaults shared by the library and the command line
#

# Gittins calibration: discount, truncation depth and lambda grid resolution
DEFAULT_GAMMA = 0.99
DEFAULT_GITTINS_HORIZON = 1000
DEFAULT_LAMBDA_STEP = 0.001
DEFAULT_MAX_PULLS = 200

# Upper bound on lambda-grid x state cells a Gittins computation may touch
DEFAULT_STATE_BUDGET = 2 * 10 ** 9

# Rejection sampling for the ordered prior
DEFAULT_SAMPLE_COUNT = 10000
DEFAULT_MIN_ACCEPTED = 100

# Success rewards of the discount experiment: 20%, 10% and 0% discount
DEFAULT_CONSTRAINED_REWARDS = (0.8, 0.9, 1.0)

# Values closer than this to the maximum are ties
TIE_TOLERANCE = 1e-9

# Below this many instances confidence bands are not reported
MIN_CI_INSTANCES = 30


class BanditLabError(Exception):
    pass

class ArgumentError(BanditLabError, ValueError):
    pass

class StateRangeError(BanditLabError, IndexError):
    pass

class ComputationError(BanditLabError):
    pass

class ResourceBudgetError(BanditLabError):
    pass

class ConfigError(BanditLabError):
    pass

class TableFormatError(BanditLabError):

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = 'line {}: {}'.format(lineno, message)
        super().__init__(message)
        self.lineno = lineno

class TableMismatchError(TableFormatError):
    pass

class DiagnosticError(BanditLabError):

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

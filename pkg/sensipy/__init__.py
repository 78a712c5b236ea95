__version__ = "0.1.0"

from sensipy import grf
from sensipy import pde
from sensipy import metrics
from sensipy import risk
from sensipy import experiments
from sensipy import io
from sensipy.grid import Grid, Field
from sensipy.exceptions import (SensipyError, ValidationError, DecompositionError,
                                ConvergenceError, UnboundedSupportError, ConfigError)

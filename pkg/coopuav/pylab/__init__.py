from . import util
from . import random
from . import base
from . import errors
from . import multiprocessing

from .util import isbool, isint, isnumeric, isfinite, atomic_write
from .base import Saveable
from .random import streams, rician_power, bernoulli, db_to_linear
from .multiprocessing import ordered_map, JobFailure, isjobfailure

from .errors import CoopUAVError, GeometryError, UndefinedAngleError, OffSegmentError, \
    ZeroDistanceError, ChannelError, MissingGainError, SensingError, InfeasibleTaskError, \
    OutOfRegionError, ProtocolError, NoRelayAvailableError, TrajectoryError, \
    UnreachableQoSError, DeadlineQoSConflictError, ResourceError, InfeasibleStartError, \
    BudgetExceededError, ScenarioError, ScenarioParseError, \
    ValidationError, SlotError

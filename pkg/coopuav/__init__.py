# Import top level
from . import pylab
from . import geometry
from . import channel
from . import sensing
from . import trajectory
from . import rrm
from . import protocol
from . import oracle
from . import config
from . import simulate
from . import synthetic
from . import visualization

# Import key modules from pylab
from .pylab import random
from .pylab import errors

# Import is* methods for type checking from pylab
from .pylab.util import isnumeric, isbool, isint, isfinite
from .pylab.multiprocessing import isjobfailure
from .config import isScenarioConfig

# Commonly used classes and functions
from .geometry import Point3, Segment, SphericalCrown
from .channel import RadioParams, GainTable
from .sensing import SensingModel, SensingTask, TaskState
from .protocol import World, SlotRecord, run_slot
from .config import ScenarioConfig, load_scenario, write_scenario
from .simulate import RunSummary, run, replicate
from .synthetic import make_scenario
from .names import SCHEMES, MODES, COLUMNS

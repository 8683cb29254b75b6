'''Exceptions for coopuav

Every error carries the exit code that the command line interface returns
when the error reaches it.
'''

EXIT_SUCCESS = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_BUDGET = 3


class CoopUAVError(Exception):
    '''Base class of every error raised by the package
    '''
    exit_code = EXIT_RUNTIME


# Geometry
# --------
class GeometryError(CoopUAVError):
    pass


class UndefinedAngleError(GeometryError):
    '''The elevation angle is not defined (the aerial point is not above the
    ground point)
    '''
    pass


class OffSegmentError(GeometryError):
    '''A position that should lie on a trajectory segment does not
    '''
    pass


class ZeroDistanceError(GeometryError):
    '''Two radios are closer than the 1 m reference distance of the path loss
    model
    '''
    pass


# Channel
# -------
class ChannelError(CoopUAVError):
    pass


class MissingGainError(ChannelError, KeyError):
    '''The gain table does not hold a (transmitter, receiver, subchannel) entry
    '''
    pass


# Sensing
# -------
class SensingError(CoopUAVError):
    pass


class InfeasibleTaskError(SensingError):
    '''The feasible sensing region of a task is empty
    '''
    pass


class OutOfRegionError(SensingError):
    '''The UAV tried to sense from outside the feasible region of the task
    '''
    pass


# Protocol
# --------
class ProtocolError(CoopUAVError):
    pass


class NoRelayAvailableError(ProtocolError):
    '''No candidate UAV satisfies the U2N threshold needed to act as a relay
    '''
    pass


# Trajectory
# ----------
class TrajectoryError(CoopUAVError):
    pass


class UnreachableQoSError(TrajectoryError):
    '''No point within the altitude limits meets the requested U2N rate
    '''
    pass


class DeadlineQoSConflictError(TrajectoryError):
    '''The slowest speed that still meets the deadline violates the rate
    constraint. `speed` holds the deadline speed the UAV falls back to.
    '''
    def __init__(self, message: str, speed: float):
        super().__init__(message)
        self.speed = speed


# Radio resource management
# -------------------------
class ResourceError(CoopUAVError):
    pass


class InfeasibleStartError(ResourceError):
    '''No power vector meets the rate constraints for the given allocation
    '''
    pass


class BudgetExceededError(CoopUAVError):
    '''An exhaustive search or a tree search hit its size budget
    '''
    exit_code = EXIT_BUDGET


# Scenario
# --------
class ScenarioError(CoopUAVError):
    exit_code = EXIT_VALIDATION


class ScenarioParseError(ScenarioError):
    '''The scenario file could not be read or parsed
    '''
    pass


class ValidationError(ScenarioError, ValueError):
    '''A scenario value is missing or invalid. `key` names the offending
    `section.key`.
    '''
    def __init__(self, key: str, message: str):
        super().__init__('`{}`: {}'.format(key, message))
        self.key = key


class SlotError(CoopUAVError):
    '''Wraps an error raised while executing a slot
    '''
    def __init__(self, slot: int, error: Exception):
        super().__init__('Slot {}: {}: {}'.format(slot, type(error).__name__, error))
        self.slot = slot
        self.error = error
        self.exit_code = getattr(error, 'exit_code', EXIT_RUNTIME)

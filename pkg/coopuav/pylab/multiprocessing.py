'''Process pool for independent replications.

Each replication owns its own state and random streams, so the only thing
that has to be coordinated is the order of the results: they are returned in
the order of the arguments regardless of which worker finished first.

A failure inside one job does not stop the others. It is returned as a
`JobFailure` in place of the result.
'''
import multiprocessing
import traceback
import psutil
from coopuav.logger import logger

# Typing
from typing import Any, Callable, List, Sequence, Union

from .util import isint


class JobFailure:
    '''Placeholder for a job that raised

    Parameters
    ----------
    arg : any
        Argument of the failed job
    error_type : str
        Name of the exception class
    message : str
        Text of the exception
    exit_code : int
        Exit code the exception maps to
    '''
    def __init__(self, arg: Any, error_type: str, message: str, exit_code: int, trace: str=''):
        self.arg = arg
        self.error_type = error_type
        self.message = message
        self.exit_code = exit_code
        self.trace = trace

    def __str__(self):
        return '{}: {}'.format(self.error_type, self.message)


def isjobfailure(x: Any) -> bool:
    return x is not None and issubclass(x.__class__, JobFailure)

def default_n_workers() -> int:
    '''Number of physical cores, at least 1
    '''
    n = psutil.cpu_count(logical=False)
    return max(1, n or 1)

def _guarded(payload):
    func, arg = payload
    try:
        return func(arg)
    except Exception as e:
        return JobFailure(arg=arg, error_type=type(e).__name__, message=str(e),
            exit_code=getattr(e, 'exit_code', 2), trace=traceback.format_exc())

def ordered_map(func: Callable[[Any], Any], args: Sequence[Any],
    n_workers: Union[int, None]=None) -> List[Any]:
    '''Map `func` over `args` and return the results in argument order.

    With `n_workers == 1` everything runs in the calling process ('debug'
    mode), which is also what happens when there is a single argument.

    Parameters
    ----------
    func : callable
        Picklable top-level function of one argument
    args : list
        Arguments, one job each
    n_workers : int, None
        Number of processes. If None, use the number of physical cores

    Returns
    -------
    list
        `func(arg)` or a `JobFailure` for each argument
    '''
    if n_workers is None:
        n_workers = default_n_workers()
    if not isint(n_workers):
        raise TypeError('`n_workers` ({}) must be an int'.format(type(n_workers)))
    if n_workers < 1:
        raise ValueError('`n_workers` ({}) must be >= 1'.format(n_workers))

    payloads = [(func, arg) for arg in args]
    n_workers = min(n_workers, len(payloads))
    if n_workers <= 1:
        results = [_guarded(p) for p in payloads]
    else:
        logger.info('Running {} jobs on {} processes'.format(len(payloads), n_workers))
        with multiprocessing.Pool(processes=n_workers) as pool:
            results = pool.map(_guarded, payloads, chunksize=1)

    for res in results:
        if isjobfailure(res):
            logger.error('Job `{}` failed with {}'.format(res.arg, res))
            logger.debug(res.trace)
    return results

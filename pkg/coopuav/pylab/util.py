'''Utility functions used by multiple modules
'''
import os
import tempfile
import numpy as np

# Typing
from typing import Any, Union, Callable
from pathlib import Path


def isbool(a: Any) -> bool:
    '''Checks if `a` is a bool

    Parameters
    ----------
    a : any
        Instance we are checking

    Returns
    -------
    bool
        True if `a` is a bool
    '''
    return a is not None and np.issubdtype(type(a), np.bool_)

def isint(a: Any) -> bool:
    '''Checks if `a` is an int

    Parameters
    ----------
    a : any
        Instance we are checking

    Returns
    -------
    bool
        True if `a` is an int
    '''
    return a is not None and np.issubdtype(type(a), np.integer)

def isnumeric(a: Any) -> bool:
    '''Checks if `a` is a float or an int - (cannot be a bool)

    Parameters
    ----------
    a : any
        Instance we are checking

    Returns
    -------
    bool
        True if `a` is a numeric
    '''
    return a is not None and np.issubdtype(type(a), np.number) and not isbool(a)

def isfinite(a: Any) -> bool:
    '''Checks if `a` is a finite number
    '''
    return isnumeric(a) and bool(np.isfinite(a))

def atomic_write(path: Union[str, Path], write: Callable[[str], None]):
    '''Write a file so that readers never see a partial file.

    `write` is called with a temporary filename in the destination directory;
    the temporary file then replaces `path` in a single rename.

    Parameters
    ----------
    path : str, Path
        Final destination
    write : callable
        Writes the content to the filename it is given
    '''
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix='.' + path.name, suffix='.tmp')
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, str(path))
    except:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise

'''Base classes shared by the package
'''
import pickle

from .util import atomic_write


class Saveable:
    '''Pickle persistence for objects that are handed between processes or
    kept next to run outputs
    '''
    def save(self, filename: str):
        '''Pickle the object to `filename`. The file is replaced atomically.
        '''
        def write(tmp):
            with open(tmp, 'wb') as f:
                pickle.dump(self, f, protocol=pickle.HIGHEST_PROTOCOL)
        atomic_write(filename, write)

    @classmethod
    def load(cls, filename: str):
        '''Unpickle an object of type `cls` from `filename`

        Raises
        ------
        TypeError
            If the file holds an object of another type
        '''
        with open(str(filename), 'rb') as f:
            obj = pickle.load(f)
        if not isinstance(obj, cls):
            raise TypeError('`{}` holds a {}, not a {}'.format(filename,
                type(obj).__name__, cls.__name__))
        return obj

import os
import pytest
import numpy as np

import coopuav
from coopuav import pylab as pl
from coopuav.pylab.util import atomic_write


def test_type_checks():
    assert pl.isint(3) and pl.isint(np.int64(3))
    assert not pl.isint(True)
    assert not pl.isint(3.)
    assert pl.isnumeric(2.5) and not pl.isnumeric(False)
    assert pl.isfinite(1e300)
    assert not pl.isfinite(np.inf)
    assert not pl.isfinite(None)
    assert pl.isbool(np.bool_(True))

def test_only_used_checks_are_exported():
    for name in ('isarray', 'isstr', 'isfloat'):
        assert not hasattr(pl, name)
        assert not hasattr(coopuav, name)

def test_atomic_write_cleans_up_on_failure(tmp_path):
    target = tmp_path / 'out' / 'table.csv'

    def fail(tmp):
        with open(tmp, 'w') as f:
            f.write('partial')
        raise RuntimeError('disk full')

    with pytest.raises(RuntimeError):
        atomic_write(target, fail)
    assert os.listdir(tmp_path / 'out') == []

    def ok(tmp):
        with open(tmp, 'w') as f:
            f.write('done')

    atomic_write(target, ok)
    assert target.read_text() == 'done'
    assert os.listdir(tmp_path / 'out') == ['table.csv']

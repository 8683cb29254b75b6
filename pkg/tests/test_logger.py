import io
import logging
import pytest

from coopuav.logger import default_loggers, set_level, logger


def test_default_loggers_split_at_error():
    out, err = io.StringIO(), io.StringIO()
    log = default_loggers(logging.DEBUG, stdout=out, stderr=err, name='coopuav-test-split')
    try:
        log.debug('slot detail')
        log.info('run summary')
        log.warning('qos fallback')
        log.error('seed failed')
    finally:
        for handler in list(log.handlers):
            log.removeHandler(handler)
    assert '[DEBUG]' in out.getvalue()
    assert '[INFO]' in out.getvalue()
    assert '[WARNING]' in out.getvalue()
    assert 'seed failed' not in out.getvalue()
    assert err.getvalue().count('\n') == 1
    assert '[ERROR]' in err.getvalue()

def test_set_level():
    old = logger.level
    try:
        set_level('debug')
        assert logger.level == logging.DEBUG
        with pytest.raises(ValueError):
            set_level('chatty')
    finally:
        logger.setLevel(old)

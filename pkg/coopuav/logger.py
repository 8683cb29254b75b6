import os
import sys
import logging
import logging.config


__env_key__ = "COOPUAV_LOG_INI"
__name__ = "CoopUAVLogger"
__ini__ = os.getenv(__env_key__, os.path.abspath("log_config.ini"))


class BelowErrorFilter(logging.Filter):
    def filter(self, rec):
        return rec.levelno < logging.ERROR


def default_loggers(level: int=logging.INFO, stdout=None, stderr=None, name: str="DefaultLogger"):
    # Default behavior: direct DEBUG/INFO/WARNING to stdout, ERROR and above to stderr.
    formatter = logging.Formatter("%(asctime)s [%(levelname)s] [%(module)s.py (%(lineno)d)] - %(message)s")

    stdout_handler = logging.StreamHandler(sys.stdout if stdout is None else stdout)
    stdout_handler.addFilter(BelowErrorFilter())
    stdout_handler.setLevel(logging.DEBUG)
    stdout_handler.setFormatter(formatter)

    stderr_handler = logging.StreamHandler(sys.stderr if stderr is None else stderr)
    stderr_handler.setLevel(logging.ERROR)
    stderr_handler.setFormatter(formatter)

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.addHandler(stdout_handler)
    logger.addHandler(stderr_handler)
    return logger


def set_level(level: str):
    '''Change the verbosity of the package logger (`debug`, `info`, `warning`, `error`)
    '''
    numeric = getattr(logging, level.upper(), None)
    if not isinstance(numeric, int):
        raise ValueError('`level` ({}) not recognized'.format(level))
    logger.setLevel(numeric)


# ============= Create logger instance. Execute once globally. ===========
if not os.path.exists(__ini__):
    logger = default_loggers()
else:
    logging.config.fileConfig(__ini__, disable_existing_loggers=False)
    logger = logging.getLogger(__name__)

#
# Package logger, a child of the PyBaMM logger
#
import pybamm

logger = pybamm.logger.getChild("otda")


def set_logging_level(level):
    """Set the level of the otda logger, e.g. ``"INFO"`` or ``"DEBUG"``."""
    logger.setLevel(level)

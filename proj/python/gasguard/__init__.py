"""Gas leak monitor simulation: sensor model, alarm firmware, modem and gateway."""

from ._gasguard import *  # noqa: F401,F403
from ._gasguard import __doc__  # noqa: F401

__version__ = "0.1.0"

"""Echo state network classification: ridge output weights and Tucker-2 cores."""

from ._esnt import *  # noqa: F401,F403
from ._esnt import __doc__  # noqa: F401

__version__ = "0.1.0"

"""Temporal action detection with structured segment networks.

Thin Python bindings over the C++ core: TAG proposals, structured temporal
pyramid pooling, the activity/completeness/regression heads, training,
reordered inference and the evaluators.
"""

from ._ssn import *  # noqa: F401,F403
from ._ssn import __version__  # noqa: F401

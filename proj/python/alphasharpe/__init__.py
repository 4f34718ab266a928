"""Risk-adjusted return metrics, rank-based evaluation and portfolio allocation."""

from ._alphasharpe import *  # noqa: F401,F403
from ._alphasharpe import __doc__ as _core_doc  # noqa: F401

"""Regenerative random sets, their exact set algebra, and the product-system checks built on them."""
from .errors import EmptySetError, ParameterError, VacuousTestError
from .sets import GapSet

__version__ = "0.1.0"

__all__ = ["GapSet", "ParameterError", "EmptySetError", "VacuousTestError", "__version__"]

"""gjsq: simulation, exact oracle and single queue approximation of GJSQ-routed processor-sharing servers."""

# using importlib.metadata
import importlib.metadata

__version__ = importlib.metadata.version(__name__)

__all__ = ["__version__"]

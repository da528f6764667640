"""Text generation with an explicit, controllable content-selection mask."""

__version__ = "0.1.0"

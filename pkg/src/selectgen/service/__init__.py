from .app import create_app
from .engine import Engine, GeneratedText

__all__ = ["Engine", "GeneratedText", "create_app"]

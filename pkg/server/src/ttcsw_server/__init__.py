"""HTTP shim serving the ttcsw wire protocol over seq2seq checkpoints,
with echo and fixture modes for integration testing."""

__version__ = "0.1.0"

from .config import ServerConfig  # noqa: F401
from .service import create_app  # noqa: F401

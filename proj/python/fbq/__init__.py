"""Limited-feedback product quantization and robust power control."""

from ._fbq import *  # noqa: F401,F403
from ._fbq import __version__  # noqa: F401

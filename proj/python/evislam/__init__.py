"""Event-RGBD tracking and mapping with an implicit surface field."""

try:
    from ._core import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:  # development layout: extension in the CMake build tree
    from _core import *  # noqa: F401,F403

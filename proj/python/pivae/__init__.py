from ._pivae import *  # noqa: F401,F403
from ._pivae import __doc__  # noqa: F401

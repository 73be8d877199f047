from ._vgrl import *  # noqa: F401,F403
from ._vgrl import __doc__  # noqa: F401

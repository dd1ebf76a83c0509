from ._aoi_edge import *  # noqa: F401,F403
from ._aoi_edge import __version__, build_id  # noqa: F401

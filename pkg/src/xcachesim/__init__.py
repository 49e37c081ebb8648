"""Trace-driven simulation and analytics for a federated XRootD-style file cache."""

__version__ = "0.1.0"

from importlib.resources import files as _files


def data_file(*parts) -> str:
    """Path of a bundled fixture, e.g. ``data_file("site_hardware.json")``."""
    return str(_files(__name__).joinpath("data", *parts))


from .analytics import (
    Window,
    WorkingSetReport,
    capacity_plan,
    rolling_working_set,
    working_set_dataset,
    working_set_file,
)
from .cache import CacheConfig, CacheNode, Disk, purge, used_fraction
from .catalog import Catalog, CatalogEntry, job_tier_share, load_catalog, tier_of, total_tier_size
from .federation import ResolveTrace, Topology, build_topology, load_topology, resolve, select_server
from .monicron import AggregateWindow, JobRecord, aggregate
from .simulate import LatencyModel, World, compare_modes, load_world, replay, summarize
from .trace import AccessEvent, load_trace

"""sortgraph: in-memory dynamic graph store.

A space-optimized layered radix index maps vertex ids to slots in a
segmented vertex table; per-vertex edge arrays combine an immutable
snapshot with an append log and compact in place, keeping old versions
reachable for snapshot readers.  Analytics run over any snapshot; a
reference oracle replays recorded traces for end-to-end validation.
"""

from .optimizer import (
    FanoutConfig,
    UniverseSpec,
    baseline_config,
    default_layers,
    expected_space,
    node_probability,
    optimize,
)
from .index import SortTree, slot_count_for_ids
from .table import VertexBlock, VertexTable
from .edgestore import EdgeStore, SegmentedBitmap, TOMBSTONE
from .graph import (
    GraphError,
    GraphStore,
    MemoryReport,
    SnapshotHandle,
    VertexNotFound,
)
from .oracle import OracleError, OracleGraph

__all__ = [
    "FanoutConfig",
    "UniverseSpec",
    "baseline_config",
    "default_layers",
    "expected_space",
    "node_probability",
    "optimize",
    "SortTree",
    "slot_count_for_ids",
    "VertexBlock",
    "VertexTable",
    "EdgeStore",
    "SegmentedBitmap",
    "TOMBSTONE",
    "GraphError",
    "GraphStore",
    "MemoryReport",
    "SnapshotHandle",
    "VertexNotFound",
    "OracleError",
    "OracleGraph",
]

__version__ = "0.1.0"

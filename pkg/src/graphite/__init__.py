"""Collaborative 3D network-visualization backend.

Lays out graphs in 3D (annealed force-directed placement), clusters them
by modularity, down-samples to render budgets, and synchronizes
multi-user grab/scale/highlight sessions over a loss-tolerant datagram
protocol with fair type scheduling.
"""

from .community import Partition, detect_communities, modularity
from .graph import (DegreeHistogram, Graph, GraphFormatError,
                    GraphValidationError, IngestReport, VertexMeta,
                    degree_distribution, load_graph, serialize_annotated)
from .interaction import (GraphTransform, HandFrame, InteractionState,
                          encode_pose, pose_to_mode, step_session)
from .kdtree import KdTree, build
from .layout import LayoutParams, LayoutState, init_layout, layout_step, run_layout
from .sampling import SampleSpec, ks_distance, sample_re, sample_rn, sample_rw
from .session import FairScheduler, SessionHub, StateStore, merge_state
from .wire import (Datagram, Message, MsgType, ReassemblyBuffer,
                   decode_datagram, encode_message)

__version__ = "0.1.0"

__all__ = [
    "DegreeHistogram", "Graph", "GraphFormatError", "GraphValidationError",
    "IngestReport", "VertexMeta", "degree_distribution", "load_graph",
    "serialize_annotated",
    "LayoutParams", "LayoutState", "init_layout", "layout_step", "run_layout",
    "Partition", "detect_communities", "modularity",
    "SampleSpec", "ks_distance", "sample_re", "sample_rn", "sample_rw",
    "KdTree", "build",
    "GraphTransform", "HandFrame", "InteractionState", "encode_pose",
    "pose_to_mode", "step_session",
    "Datagram", "Message", "MsgType", "ReassemblyBuffer", "decode_datagram",
    "encode_message",
    "FairScheduler", "SessionHub", "StateStore", "merge_state",
    "__version__",
]

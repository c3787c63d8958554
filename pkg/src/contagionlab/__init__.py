"""Complex contagions on time-evolving random graphs."""

from .graphs import (
    ConfigError,
    EvolvingGraph,
    GenConfig,
    Model,
    Multigraph,
    OrientedTriple,
    StagePartition,
    generate,
    load_graph,
    save_graph,
    sort_triples,
    stage_of,
)

__version__ = "0.1.0"

"""Heatmap-construction solver with a learned search meta-optimizer."""

from ._core import (
    ProblemInstance,
    Solution,
    __version__,
    checkpoint_manifest,
    farthest_insertion,
    generate_mis,
    generate_tsp,
    held_karp,
    load_dataset,
    load_instance,
    make_default_checkpoint,
    mis_exact,
    save_instance,
    solve,
)

__all__ = [
    "ProblemInstance",
    "Solution",
    "__version__",
    "checkpoint_manifest",
    "farthest_insertion",
    "generate_mis",
    "generate_tsp",
    "held_karp",
    "load_dataset",
    "load_instance",
    "make_default_checkpoint",
    "mis_exact",
    "save_instance",
    "solve",
]

from .engine import (
    ADVERSARIES,
    CycleEngine,
    EngineConfigError,
    EnginePoisoned,
    NaiveEngine,
    StepResult,
    TraceReport,
    adversary_directions,
    boundary_query_fixup,
    clamp_wraparound,
    naive_step,
    random_directions,
    run_trace,
    walk_nodes,
)

__all__ = [
    "ADVERSARIES",
    "CycleEngine",
    "EngineConfigError",
    "EnginePoisoned",
    "NaiveEngine",
    "StepResult",
    "TraceReport",
    "adversary_directions",
    "boundary_query_fixup",
    "clamp_wraparound",
    "naive_step",
    "random_directions",
    "run_trace",
    "walk_nodes",
]

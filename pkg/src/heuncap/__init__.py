"""Computer-assisted analysis of a spurious period-4 sink of Heun's method."""

from .analysis import (
    BasinGrid,
    BasinSpec,
    CascadeScan,
    NoStableCycleError,
    SinkOrbit,
    basin_raster,
    bifurcation_scan,
    cobweb_data,
    critical_point_of_g,
    find_sink_orbit,
    phase_trajectory,
    positive_root_of_g,
)
from .config import RunConfig, load_config
from .dynamics import (
    DEFAULT_PARAMS,
    VectorFieldParams,
    heun_map,
    heun_map_iv,
    restricted_map_g,
    stability_R,
    vector_field,
)
from .engine import (
    SINK_POINTS,
    AbsorptionMode,
    Cloud,
    EngineConfig,
    ProofResult,
    prove_absorption,
    run_sink_invariance,
    run_trajectory_proof,
)
from .interval import Box, Interval, IntervalError
from .report import emit_latex_table

__version__ = "0.1.0"

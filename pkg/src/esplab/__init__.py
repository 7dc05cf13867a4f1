"""esplab: a stability laboratory for echo state networks.

Build randomly initialized tanh reservoirs, measure their empirical
echo-state-property index on concrete input signals, decide the classical
necessary/sufficient stability conditions, train ridge readouts for next-step
prediction, and sweep the (spectral radius x input scaling) plane with
reproducible seeds, durable CSV results and SVG heatmaps.
"""

from .conditions import (
    ConditionReport,
    InputConditionResult,
    evaluate_conditions,
    input_dependent_sufficient,
    necessary_condition,
    schur_certificate_search,
    spectral_norm,
)
from .datasets import (
    NextStepTask,
    henon_series,
    load_laser,
    load_signal,
    load_sunspot_silso,
    make_next_step_task,
    save_signal,
)
from .esp import (
    DEFAULT_ESP_TOL,
    EspIndexConfig,
    EspIndexResult,
    esp_index,
    is_esp_empirical,
    orbit_deviation,
)
from .heatmap import heatmap_svg, render_heatmap
from .readout import (
    DEFAULT_LAMBDA_GRID,
    ReadoutWeights,
    RegressionProblem,
    TaskEvaluation,
    evaluate_next_step,
    harvest_states,
    log10_mse,
    mse,
    predict,
    ridge_fit,
    select_lambda,
)
from .reservoir import (
    DegenerateReservoirError,
    Orbit,
    ReservoirParams,
    Signal,
    init_reservoir,
    run_orbit,
    spectral_radius,
    step,
)
from .sweep import (
    SchemaError,
    SweepConfig,
    SweepRecord,
    SweepResults,
    cell_seeds,
    normalize_index_grid,
    read_results,
    run_sweep,
    write_results,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionReport",
    "DEFAULT_ESP_TOL",
    "DEFAULT_LAMBDA_GRID",
    "DegenerateReservoirError",
    "EspIndexConfig",
    "EspIndexResult",
    "InputConditionResult",
    "NextStepTask",
    "Orbit",
    "ReadoutWeights",
    "RegressionProblem",
    "ReservoirParams",
    "SchemaError",
    "Signal",
    "SweepConfig",
    "SweepRecord",
    "SweepResults",
    "TaskEvaluation",
    "cell_seeds",
    "esp_index",
    "evaluate_conditions",
    "evaluate_next_step",
    "harvest_states",
    "heatmap_svg",
    "henon_series",
    "init_reservoir",
    "input_dependent_sufficient",
    "is_esp_empirical",
    "load_laser",
    "load_signal",
    "load_sunspot_silso",
    "log10_mse",
    "make_next_step_task",
    "mse",
    "necessary_condition",
    "normalize_index_grid",
    "orbit_deviation",
    "predict",
    "read_results",
    "render_heatmap",
    "ridge_fit",
    "run_orbit",
    "run_sweep",
    "save_signal",
    "schur_certificate_search",
    "select_lambda",
    "spectral_norm",
    "spectral_radius",
    "step",
    "write_results",
]

from .pareto import (METRIC_AXES, ParetoPoint, additivity_residual, dominates,
                     pareto_front)
from .report import (DirectionalComparison, compare_directions, emit_report,
                     render_scatter_svg, results_to_points)
from .runner import (PAIR_COLUMNS, RESULTS_COLUMNS, BenchmarkSpec, PairMetrics,
                     RunConfig, RunResult, directional_grid, paper_preset_grid,
                     run_grid, run_one, smoke_grid, stylize_pair)

__all__ = [
    "METRIC_AXES", "ParetoPoint", "additivity_residual", "dominates",
    "pareto_front", "DirectionalComparison", "compare_directions",
    "emit_report", "render_scatter_svg", "results_to_points", "PAIR_COLUMNS",
    "RESULTS_COLUMNS", "BenchmarkSpec", "PairMetrics", "RunConfig",
    "RunResult", "directional_grid", "paper_preset_grid", "run_grid",
    "run_one", "smoke_grid", "stylize_pair",
]

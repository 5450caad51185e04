"""
Vector-geometry evaluation metrics.
"""

from .areas import AreaReport, boolean_areas, mre, mro, mrg, polygon_area, rasterize_areas
from .adjacency import adjacency_matrix, type_adjacency_counts, type_counts
from .evaluate import EvalSummary, EvaluationResult, SampleRow, evaluate, mse_a, mse_s, mse_t, plan_areas

"""
Evaluation of generated plans against paired references.

The MSE definitions are internal to this package: room-count vectors per type,
adjacency counts per unordered type pair, and room areas in units of 100 cells
matched greedily by type and nearest centroid.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from shapely.geometry import Polygon

from ..core.floorplan import door_adjacent_to_living
from ..core.models import Floorplan
from ..exceptions import GeometryError, MetricsError
from .adjacency import DEFAULT_MIN_SHARED, type_adjacency_counts, type_counts
from .areas import AreaReport, boolean_areas, mre, mro, mrg

logger = logging.getLogger("floorforge.metrics.evaluate")

AREA_UNIT = 100.0


@dataclass
class EvalSummary:
    """
    Aggregate metrics over N paired samples.

    The area ratios serialize under their short names mrg, mro and mre.
    """
    mean_gap: float
    mean_overlap: float
    mean_exceed: float
    mse_t: float
    mse_a: float
    mse_s: float
    n_samples: int
    door_living_rate: float = 0.0
    approximate_samples: int = 0
    skipped_samples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        short = {"mrg": data.pop("mean_gap"), "mro": data.pop("mean_overlap"), "mre": data.pop("mean_exceed")}
        return {**short, **data}


@dataclass
class SampleRow:
    """Per-sample metric contributions."""
    sample_id: str
    gap_ratio: float
    overlap_ratio: float
    exceed_ratio: float
    mse_t: float
    mse_a: float
    mse_s: float


@dataclass
class EvaluationResult:
    summary: EvalSummary
    rows: List[SampleRow] = field(default_factory=list)
    reports: List[AreaReport] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)


def _check_pairs(generated: Sequence[Floorplan], reference: Sequence[Floorplan]) -> None:
    if not generated or not reference:
        raise MetricsError("Evaluation needs at least one generated and one reference plan")
    if len(generated) != len(reference):
        raise MetricsError(f"Unpaired inputs: {len(generated)} generated vs {len(reference)} reference plans")
    for i, (g, r) in enumerate(zip(generated, reference)):
        if tuple(g.room_types) != tuple(r.room_types):
            raise MetricsError(f"Pair {i} uses different room taxonomies")


def pair_mse_t(generated: Floorplan, reference: Floorplan) -> float:
    diff = type_counts(generated) - type_counts(reference)
    return float(np.dot(diff, diff))


def pair_mse_a(generated: Floorplan, reference: Floorplan, min_shared: int = DEFAULT_MIN_SHARED) -> float:
    diff = type_adjacency_counts(generated, min_shared) - type_adjacency_counts(reference, min_shared)
    return float(np.dot(diff, diff))


def _area_and_centroid(vertices):
    shape = Polygon(vertices)
    return shape.area, (shape.centroid.x, shape.centroid.y)


def pair_mse_s(generated: Floorplan, reference: Floorplan) -> float:
    """Squared area differences over greedily matched same-type rooms."""
    total = 0.0
    for type_id in range(len(reference.room_types)):
        gen = [_area_and_centroid(r.polygon.vertices) for r in generated.rooms if r.type_id == type_id]
        ref = [_area_and_centroid(r.polygon.vertices) for r in reference.rooms if r.type_id == type_id]

        candidates = sorted(
            (np.hypot(g[1][0] - r[1][0], g[1][1] - r[1][1]), i, j)
            for i, g in enumerate(gen)
            for j, r in enumerate(ref)
        )
        used_gen, used_ref = set(), set()
        for _, i, j in candidates:
            if i in used_gen or j in used_ref:
                continue
            used_gen.add(i)
            used_ref.add(j)
            total += ((gen[i][0] - ref[j][0]) / AREA_UNIT) ** 2

        for i, (area, _) in enumerate(gen):
            if i not in used_gen:
                total += (area / AREA_UNIT) ** 2
        for j, (area, _) in enumerate(ref):
            if j not in used_ref:
                total += (area / AREA_UNIT) ** 2
    return total


def mse_t(generated: Sequence[Floorplan], reference: Sequence[Floorplan]) -> float:
    """Mean squared L2 distance between per-type room counts."""
    _check_pairs(generated, reference)
    return float(np.mean([pair_mse_t(g, r) for g, r in zip(generated, reference)]))


def mse_a(
    generated: Sequence[Floorplan], reference: Sequence[Floorplan], min_shared: int = DEFAULT_MIN_SHARED
) -> float:
    """Mean squared L2 distance between per-type-pair adjacency counts."""
    _check_pairs(generated, reference)
    return float(np.mean([pair_mse_a(g, r, min_shared) for g, r in zip(generated, reference)]))


def mse_s(generated: Sequence[Floorplan], reference: Sequence[Floorplan]) -> float:
    """Mean over pairs of summed squared room-area differences in (cells/100)^2."""
    _check_pairs(generated, reference)
    return float(np.mean([pair_mse_s(g, r) for g, r in zip(generated, reference)]))


def plan_areas(fp: Floorplan) -> AreaReport:
    """Area report of a plan's rooms against its own boundary."""
    return boolean_areas([r.polygon.vertices for r in fp.rooms], fp.boundary.vertices)


def evaluate(
    generated: Sequence[Floorplan],
    reference: Sequence[Floorplan],
    min_shared: int = DEFAULT_MIN_SHARED,
    sample_ids: Optional[Sequence[str]] = None,
) -> EvaluationResult:
    """
    Compute all six metrics over paired plans.

    A generated plan whose rooms cannot be measured (a self-intersecting or
    degenerate polygon) is skipped and counted in skipped_samples; the
    aggregates cover the remaining pairs.

    Args:
        generated: Generated plans
        reference: Reference plans in the same order
        min_shared: Adjacency threshold in grid units
        sample_ids: Optional identifiers for the per-sample rows

    Raises:
        MetricsError: If the inputs are empty or unpaired, or no pair is measurable
    """
    _check_pairs(generated, reference)
    ids = list(sample_ids) if sample_ids is not None else [str(i) for i in range(len(generated))]
    if len(ids) != len(generated):
        raise MetricsError(f"Got {len(ids)} sample ids for {len(generated)} samples")

    reports, rows, measured, skipped = [], [], [], []
    for sample_id, g, r in zip(ids, generated, reference):
        try:
            report = plan_areas(g)
        except GeometryError as e:
            logger.warning(f"Skipping sample {sample_id}: {e}")
            skipped.append(sample_id)
            continue
        reports.append(report)
        measured.append(g)
        rows.append(
            SampleRow(
                sample_id=sample_id,
                gap_ratio=float(report.gap_ratio),
                overlap_ratio=float(report.overlap_ratio),
                exceed_ratio=float(report.exceed_ratio),
                mse_t=pair_mse_t(g, r),
                mse_a=pair_mse_a(g, r, min_shared),
                mse_s=pair_mse_s(g, r),
            )
        )
    if not rows:
        raise MetricsError(f"None of the {len(generated)} generated plans could be measured")

    summary = EvalSummary(
        mean_gap=mrg(reports),
        mean_overlap=mro(reports),
        mean_exceed=mre(reports),
        mse_t=float(np.mean([row.mse_t for row in rows])),
        mse_a=float(np.mean([row.mse_a for row in rows])),
        mse_s=float(np.mean([row.mse_s for row in rows])),
        n_samples=len(rows),
        door_living_rate=float(np.mean([door_adjacent_to_living(g) for g in measured])),
        approximate_samples=sum(1 for r in reports if r.approximate),
        skipped_samples=len(skipped),
    )
    logger.info(
        f"Evaluated {summary.n_samples} samples ({summary.skipped_samples} skipped): "
        f"MRG={summary.mean_gap:.4f} MRO={summary.mean_overlap:.4f} MRE={summary.mean_exceed:.4f}"
    )
    return EvaluationResult(summary=summary, rows=rows, reports=reports, skipped=skipped)

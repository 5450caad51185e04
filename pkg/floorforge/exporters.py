"""Export functionality for FloorForge."""

import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

PathLike = Union[str, Path]


class Exporter:
    """Base class for FloorForge exporters."""

    FORMATS = ("json", "csv")

    @staticmethod
    def export(data: Any, format_type: str, output_file: PathLike) -> None:
        """Export data in the specified format (json or csv)."""
        if format_type == "json":
            Exporter._export_json(data, output_file)
        elif format_type == "csv":
            Exporter._export_csv(data, output_file)
        else:
            raise ValueError(f"Unknown export format: {format_type}; choose from {Exporter.FORMATS}")

    @staticmethod
    def _export_json(data: Any, output_file: PathLike) -> None:
        """Export data in JSON format."""
        with open(output_file, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
            f.write("\n")

    @staticmethod
    def _export_csv(data: List[Dict[str, Any]], output_file: PathLike) -> None:
        """Export data in CSV format; the first record's keys form the header."""
        with open(output_file, "w", newline="", encoding="utf-8") as f:
            if not data:
                return
            writer = csv.writer(f)
            writer.writerow(data[0].keys())
            for item in data:
                writer.writerow(item.values())


class StatsExporter(Exporter):
    """Exporter for per-epoch training records."""

    @staticmethod
    def format_data(records: List[Dict[str, Any]], precision: int = 6) -> List[Dict[str, Any]]:
        """Round floats so that repeated runs diff cleanly."""
        return [
            {k: round(v, precision) if isinstance(v, float) else v for k, v in record.items()}
            for record in records
        ]


class ManifestExporter(Exporter):
    """Exporter for generation manifests."""

    COLUMNS = ("document", "boundary", "seed", "top_p", "truncated", "invalid_rooms", "valid")

    @staticmethod
    def format_data(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        return [{column: row[column] for column in ManifestExporter.COLUMNS} for row in rows]

    @staticmethod
    def read(path: PathLike) -> List[Dict[str, str]]:
        with open(path, "r", newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))


class EvaluationExporter(Exporter):
    """Exporter for evaluation summaries."""

    METRICS = ("gap_ratio", "overlap_ratio", "exceed_ratio", "mse_t", "mse_a", "mse_s")

    @staticmethod
    def export_summary(
        result, output_file: PathLike, config: Optional[Dict[str, Any]] = None
    ) -> None:
        """
        Write the comma-separated summary.

        A header record carries the metric names and config, per-sample records
        follow, and an aggregate block closes the file.
        """
        settings = ";".join(f"{k}={v}" for k, v in sorted((config or {}).items()))
        with open(output_file, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["id", *EvaluationExporter.METRICS, f"config:{settings}"])
            for row in result.rows:
                writer.writerow([row.sample_id] + [f"{getattr(row, m):.6f}" for m in EvaluationExporter.METRICS])
            for sample_id in result.skipped:
                writer.writerow([sample_id] + ["skipped"] * len(EvaluationExporter.METRICS))
            writer.writerow([])
            writer.writerow(["aggregate", "value"])
            for key, value in result.summary.to_dict().items():
                writer.writerow([key, f"{value:.6f}" if isinstance(value, float) else value])

    @staticmethod
    def export_json(result, output_file: PathLike) -> None:
        Exporter.export(result.summary.to_dict(), "json", output_file)

"""Command-line interface for FloorForge."""

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .codebook.trainer import load_codebook, save_codebook, train_codebook
from .config import PRESETS, RunConfig, list_ablations, resolve_config, write_resolved
from .core.floorplan import validate
from .core.serialization import read_floorplan, write_floorplan
from .data.dataset import load_external, load_split, load_split_paths, split_dataset, write_dataset
from .data.synth import synth_dataset
from .exceptions import (
    ConfigError,
    DivergenceError,
    DocumentParseError,
    DomainError,
    GenerationError,
    MetricsError,
)
from .exporters import EvaluationExporter, ManifestExporter
from .generator.sampling import generate
from .generator.trainer import load_generator, save_generator, train_generator
from .metrics.evaluate import evaluate
from .render import DEFAULT_SCALE, write_svg
from .utils import ensure_dir, setup_logging

logger = logging.getLogger("floorforge.cli")

USER_ERRORS = (ConfigError, DocumentParseError, DomainError, GenerationError, MetricsError, FileNotFoundError)
DESK_CODEBOOK_BUDGET = 15 * 60
CHECKPOINT_NAME = "checkpoint.pt"
STATS_NAME = "stats.csv"
MANIFEST_NAME = "manifest.csv"
SUMMARY_NAME = "summary.csv"
SUMMARY_JSON_NAME = "summary.json"


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=PRESETS, default="desk", help="Base settings (default: desk)")
    common.add_argument("--config", help="YAML overlay merged onto the preset")
    common.add_argument(
        "--ablation",
        action="append",
        default=[],
        metavar="NAME",
        help=f"Ablation overlay, repeatable ({', '.join(list_ablations())})",
    )
    common.add_argument("--seed", type=int, default=None, help="Run seed")
    common.add_argument("--out", default=None, help="Output directory (or file for render)")
    common.add_argument("--device", default="cpu", help="Torch device for training and generation")
    common.add_argument("--verbose", action="store_true", help="Enable debug logging")
    common.add_argument("--debug", action="store_true", help="Re-raise errors with a traceback")
    return common


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="floorforge",
        description="FloorForge - boundary-conditioned vector floorplan generation",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    make_data = commands.add_parser("make-data", parents=[common], help="Synthesize and split a dataset")
    make_data.add_argument("--external", help="Ingest pre-vectorized documents instead of synthesizing")
    make_data.add_argument("--n", type=int, default=None, help="Number of plans to synthesize")

    codebook = commands.add_parser("train-codebook", parents=[common], help="Train a layout or polygon codebook")
    codebook.add_argument("level", choices=["layout", "polygon"])
    codebook.add_argument("--data", help="Dataset directory (default: <output_root>/data)")

    generator = commands.add_parser("train-generator", parents=[common], help="Train the CodeTree generator")
    generator.add_argument("--data", help="Dataset directory (default: <output_root>/data)")

    generate = commands.add_parser("generate", parents=[common], help="Generate plans for boundaries")
    generate.add_argument("--boundary", help="Boundary document or directory (default: the test split)")
    generate.add_argument("--data", help="Dataset directory used when --boundary is omitted")
    generate.add_argument("--n", type=int, default=1, help="Samples per boundary")
    generate.add_argument("--top-p", type=float, default=None, dest="top_p", help="Nucleus threshold")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Score generated plans against references")
    evaluate.add_argument("generated", help="Directory of generated documents")
    evaluate.add_argument("reference", help="Directory of reference documents")

    render = commands.add_parser("render", parents=[common], help="Render a document as SVG")
    render.add_argument("document", help="Floorplan document")
    render.add_argument("--scale", type=int, default=DEFAULT_SCALE, help="Pixels per grid unit")

    return parser.parse_args(argv)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {"seed": args.seed}
    if getattr(args, "top_p", None) is not None:
        overrides["generator.top_p"] = args.top_p
    if args.command == "make-data" and args.n is not None:
        overrides["synth.num_plans"] = args.n
    return resolve_config(args.preset, args.config, overrides, args.ablation)


def _output_dir(args: argparse.Namespace, config: RunConfig, default: str) -> Path:
    return ensure_dir(args.out or Path(config.output_root) / default)


def _data_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    if getattr(args, "data", None):
        return Path(args.data)
    if config.paths.data_dir:
        return Path(config.paths.data_dir)
    return Path(config.output_root) / "data"


def _checkpoint(configured: Optional[str], config: RunConfig, default: str, what: str) -> Path:
    path = Path(configured) if configured else Path(config.output_root) / default / CHECKPOINT_NAME
    if not path.exists():
        raise ConfigError(f"Missing {what} checkpoint: {path}")
    return path


def cmd_make_data(args: argparse.Namespace, config: RunConfig) -> int:
    out = _output_dir(args, config, "data")
    if args.external:
        skipped: List[Tuple[str, str]] = []
        plans = load_external(args.external, skipped, config.grid.max_rooms, config.grid.max_vertices)
        if skipped:
            print(f"[FloorForge]: Skipped {len(skipped)} external plans")
    else:
        plans = synth_dataset(config.synth_params(), config.synth.num_plans, progress=config.progress)
    split = split_dataset(plans, config.seed, augment=config.synth.augment)
    write_dataset(split, out)
    write_resolved(config, out)
    counts = split.counts()
    print(f"[FloorForge]: Wrote {out} (train {counts['train']}, val {counts['val']}, test {counts['test']})")
    return 0


def cmd_train_codebook(args: argparse.Namespace, config: RunConfig) -> int:
    plans = load_split(_data_dir(args, config), "train")
    if not plans:
        raise ConfigError("The training split is empty")
    out = _output_dir(args, config, f"codebook_{args.level}")
    write_resolved(config, out)

    started = time.monotonic()
    model, stats = train_codebook(
        args.level, plans, config.vqvae_config(args.level), config.seed, config.progress, args.device
    )
    elapsed = time.monotonic() - started
    if config.preset == "desk" and elapsed > DESK_CODEBOOK_BUDGET:
        logger.warning(f"Desk codebook training took {elapsed / 60:.1f} min (budget {DESK_CODEBOOK_BUDGET // 60} min)")

    save_codebook(model, out / CHECKPOINT_NAME, plans[0].room_types, config.seed, stats)
    stats.write_csv(out / STATS_NAME)
    print(f"[FloorForge]: {args.level} codebook saved to {out / CHECKPOINT_NAME} (final loss {stats.losses()[-1]:.4f})")
    return 0


def cmd_train_generator(args: argparse.Namespace, config: RunConfig) -> int:
    layout_path = _checkpoint(config.paths.layout_checkpoint, config, "codebook_layout", "layout codebook")
    polygon_path = _checkpoint(config.paths.polygon_checkpoint, config, "codebook_polygon", "polygon codebook")
    data_dir = _data_dir(args, config)
    plans = load_split(data_dir, "train")
    if not plans:
        raise ConfigError("The training split is empty")
    val_plans = load_split(data_dir, "val")
    out = _output_dir(args, config, "generator")
    write_resolved(config, out)

    layout_model, _ = load_codebook(layout_path, args.device)
    polygon_model, _ = load_codebook(polygon_path, args.device)
    model, stats = train_generator(
        plans,
        layout_model,
        polygon_model,
        config.generator_config(),
        config.seed,
        config.progress,
        val_plans=val_plans,
        device=args.device,
    )
    save_generator(model, out / CHECKPOINT_NAME, plans[0].room_types, config.seed, stats)
    stats.write_csv(out / STATS_NAME)
    print(f"[FloorForge]: Generator saved to {out / CHECKPOINT_NAME} (final loss {stats.losses()[-1]:.4f})")
    return 0


def _boundary_files(args: argparse.Namespace, config: RunConfig) -> List[Path]:
    if args.boundary:
        path = Path(args.boundary)
        if not path.exists():
            raise FileNotFoundError(f"No such file or directory: {path}")
        return sorted(path.glob("*.json")) if path.is_dir() else [path]
    return load_split_paths(_data_dir(args, config), "test")


def cmd_generate(args: argparse.Namespace, config: RunConfig) -> int:
    if args.n < 1:
        raise ConfigError("--n must be at least 1")
    gen_path = _checkpoint(config.paths.generator_checkpoint, config, "generator", "generator")
    files = _boundary_files(args, config)
    if not files:
        raise ConfigError("No boundary documents to generate for")
    out = _output_dir(args, config, "generated")
    write_resolved(config, out)

    model, meta = load_generator(gen_path, args.device)
    top_p = config.generator_config().top_p
    rows = []
    for file in files:
        boundary = read_floorplan(file).boundary
        for seed in range(config.seed, config.seed + args.n):
            fp, report = generate(boundary, model, seed, meta["room_types"], top_p)
            document = write_floorplan(fp, out / f"{file.stem}_s{seed}.json")
            rows.append(
                {
                    "document": document.name,
                    "boundary": str(file),
                    "seed": seed,
                    "top_p": top_p,
                    "truncated": report.truncated,
                    "invalid_rooms": len(report.invalid_rooms),
                    "valid": report.validation.is_valid,
                }
            )
    ManifestExporter.export(ManifestExporter.format_data(rows), "csv", out / MANIFEST_NAME)
    print(f"[FloorForge]: Generated {len(rows)} plans in {out}")
    return 0


def pair_documents(generated_dir: Path, reference_dir: Path) -> List[Tuple[str, Path, Path]]:
    """
    Pair generated documents with references through the generation manifest,
    falling back to identical file names.

    Raises:
        MetricsError: If a generated document has no reference
    """
    manifest = generated_dir / MANIFEST_NAME
    pairs = []
    if manifest.exists():
        for row in ManifestExporter.read(manifest):
            reference = reference_dir / Path(row["boundary"]).name
            pairs.append((row["document"], generated_dir / row["document"], reference))
    else:
        for document in sorted(generated_dir.glob("*.json")):
            pairs.append((document.name, document, reference_dir / document.name))
    missing = [str(ref) for _, _, ref in pairs if not ref.exists()]
    if missing:
        raise MetricsError(f"{len(missing)} generated documents have no reference, e.g. {missing[0]}")
    return pairs


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    generated_dir, reference_dir = Path(args.generated), Path(args.reference)
    for directory in (generated_dir, reference_dir):
        if not directory.is_dir():
            raise FileNotFoundError(f"No such directory: {directory}")
    pairs = pair_documents(generated_dir, reference_dir)
    generated = [read_floorplan(g) for _, g, _ in pairs]
    reference = [read_floorplan(r) for _, _, r in pairs]
    result = evaluate(generated, reference, config.metrics.min_shared, [sample_id for sample_id, _, _ in pairs])

    out = _output_dir(args, config, "evaluation")
    write_resolved(config, out)
    EvaluationExporter.export_summary(
        result, out / SUMMARY_NAME, {"min_shared": config.metrics.min_shared, "seed": config.seed}
    )
    EvaluationExporter.export_json(result, out / SUMMARY_JSON_NAME)
    summary = result.summary
    print(f"N        {summary.n_samples}")
    print(f"MRG      {summary.mean_gap:.6f}")
    print(f"MRO      {summary.mean_overlap:.6f}")
    print(f"MRE      {summary.mean_exceed:.6f}")
    print(f"MSE_T    {summary.mse_t:.6f}")
    print(f"MSE_A    {summary.mse_a:.6f}")
    print(f"MSE_S    {summary.mse_s:.6f}")
    return 0


def cmd_render(args: argparse.Namespace, config: RunConfig) -> int:
    document = Path(args.document)
    fp = read_floorplan(document)
    report = validate(fp)
    if not report.is_valid:
        logger.warning(f"Rendering a plan with violations: {report.summary()}")
    out = Path(args.out) if args.out else document.with_suffix(".svg")
    write_svg(fp, out, args.scale)
    write_resolved(config, out.parent)
    print(f"[FloorForge]: Rendered {out}")
    return 0


COMMANDS = {
    "make-data": cmd_make_data,
    "train-codebook": cmd_train_codebook,
    "train-generator": cmd_train_generator,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "render": cmd_render,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the floorforge command."""
    debug = bool(os.getenv("FLOORFORGE_DEBUG"))
    try:
        args = parse_args(argv)
        debug = debug or args.debug
        setup_logging(logging.DEBUG if args.verbose else logging.INFO)
        config = load_run_config(args)
        logger.info(f"Running {args.command} with preset {config.preset}, seed {config.seed}")
        return COMMANDS[args.command](args, config)

    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        return 1
    except USER_ERRORS as e:
        print(f"Error: {e}", file=sys.stderr)
        if debug:
            raise
        return 1
    except DivergenceError as e:
        print(f"Training diverged: {e}", file=sys.stderr)
        if debug:
            raise
        return 2
    except Exception as e:
        print(f"Internal error: {e}", file=sys.stderr)
        if debug:
            raise
        return 2


if __name__ == "__main__":
    sys.exit(main())

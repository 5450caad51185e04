"""Unit tests for the command-line interface."""

import json
import sys
from unittest.mock import MagicMock, patch

import pytest
import yaml

from floorforge import cli
from floorforge.cli import CHECKPOINT_NAME, MANIFEST_NAME, SUMMARY_NAME, main, pair_documents, parse_args
from floorforge.config import OUTPUT_ROOT_ENV, RESOLVED_NAME
from floorforge.core.serialization import write_floorplan
from floorforge.data.dataset import MANIFEST_NAME as DATASET_MANIFEST
from floorforge.exceptions import DivergenceError, MetricsError

TINY_RUN = {
    "progress": False,
    "vqvae": {
        "layout_codebook_size": 16,
        "polygon_codebook_size": 16,
        "model": {
            "d_model": 16, "d_ff": 32, "layers": 1, "heads": 2, "embed_dim": 8,
            "batch_size": 16, "epochs": 1, "warmup_steps": 1,
        },
    },
    "generator": {
        "d_model": 16, "d_ff": 32, "layers": 1, "heads": 2,
        "batch_size": 8, "epochs": 1, "warmup_steps": 1, "max_polygon_tokens": 400,
    },
}


@pytest.fixture
def output_root(temp_workspace, monkeypatch):
    """Point the output root at the temporary workspace."""
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(temp_workspace))
    monkeypatch.delenv("FLOORFORGE_DEBUG", raising=False)
    return temp_workspace


@pytest.fixture
def dataset(output_root):
    """A small synthetic dataset written by make-data."""
    assert main(["make-data", "--n", "12", "--seed", "3"]) == 0
    return output_root / "data"


class TestParseArgs:
    """Test suite for argument parsing."""

    def test_make_data(self):
        """Test make-data options and common defaults."""
        with patch.object(sys, "argv", ["floorforge", "make-data", "--n", "50"]):
            args = parse_args()
            assert args.command == "make-data"
            assert args.n == 50
            assert args.preset == "desk"
            assert args.seed is None
            assert args.ablation == []

    def test_train_codebook(self):
        """Test the level argument and repeated ablations."""
        with patch.object(
            sys, "argv",
            ["floorforge", "train-codebook", "polygon", "--ablation", "type_I", "--ablation", "mask_10_90"],
        ):
            args = parse_args()
            assert args.level == "polygon"
            assert args.ablation == ["type_I", "mask_10_90"]

        with patch.object(sys, "argv", ["floorforge", "train-codebook", "room"]):
            with pytest.raises(SystemExit):
                parse_args()

    def test_generate(self):
        """Test generate options."""
        with patch.object(
            sys, "argv",
            ["floorforge", "generate", "--boundary", "b.json", "--n", "3", "--top-p", "0.8", "--preset", "paper"],
        ):
            args = parse_args()
            assert args.boundary == "b.json"
            assert args.n == 3
            assert args.top_p == 0.8
            assert args.preset == "paper"

    def test_evaluate_and_render(self):
        """Test positional arguments of evaluate and render."""
        args = parse_args(["evaluate", "gen", "ref"])
        assert (args.generated, args.reference) == ("gen", "ref")
        args = parse_args(["render", "plan.json", "--scale", "4"])
        assert (args.document, args.scale) == ("plan.json", 4)

    def test_paper_preset(self):
        """Test the full-scale preset is selectable as paper."""
        args = parse_args(["make-data", "--preset", "paper"])
        assert args.preset == "paper"
        with pytest.raises(SystemExit):
            parse_args(["make-data", "--preset", "full"])

    def test_missing_command(self):
        """Test a subcommand is required."""
        with pytest.raises(SystemExit):
            parse_args([])


class TestExitCodes:
    """Test suite for error handling in main."""

    def test_missing_dataset(self, output_root, capsys):
        """Test training without a dataset exits with 1."""
        assert main(["train-codebook", "layout", "--data", str(output_root / "nowhere")]) == 1
        assert "No dataset manifest" in capsys.readouterr().err

    def test_missing_checkpoint(self, dataset, capsys):
        """Test training the generator without codebooks exits with 1."""
        assert main(["train-generator"]) == 1
        assert "Missing layout codebook checkpoint" in capsys.readouterr().err

    def test_bad_document(self, output_root, capsys):
        """Test rendering a malformed document exits with 1 and names the line."""
        path = output_root / "bad.json"
        path.write_text('{\n  "grid_bits": 6,\n  "rooms": [\n')
        assert main(["render", str(path)]) == 1
        assert "line" in capsys.readouterr().err

    def test_bad_sample_count(self, output_root):
        """Test generate rejects --n below 1."""
        assert main(["generate", "--n", "0"]) == 1

    def test_unknown_ablation(self, output_root):
        """Test an unknown overlay name exits with 1."""
        assert main(["make-data", "--ablation", "nonsense"]) == 1

    def test_debug_reraises(self, output_root):
        """Test --debug shows the original exception."""
        path = output_root / "bad.json"
        path.write_text("{")
        with pytest.raises(Exception):
            main(["render", str(path), "--debug"])

    def test_interrupt(self, output_root):
        """Test Ctrl-C exits with 1."""
        with patch.dict(cli.COMMANDS, {"render": MagicMock(side_effect=KeyboardInterrupt)}):
            assert main(["render", "plan.json"]) == 1

    def test_divergence(self, output_root, capsys):
        """Test a diverged run exits with 2."""
        failing = MagicMock(side_effect=DivergenceError(3, 40, {"loss": float("nan")}))
        with patch.dict(cli.COMMANDS, {"render": failing}):
            assert main(["render", "plan.json"]) == 2
        assert "diverged" in capsys.readouterr().err


class TestCommands:
    """Test suite for the data, render and evaluate commands."""

    def test_make_data(self, dataset):
        """Test make-data writes splits, manifest and the resolved config."""
        assert (dataset / DATASET_MANIFEST).exists()
        assert len(list((dataset / "train").glob("*.json"))) == 10
        assert len(list((dataset / "test").glob("*.json"))) == 1
        resolved = yaml.safe_load((dataset / RESOLVED_NAME).read_text())
        assert resolved["seed"] == 3
        assert resolved["synth"]["num_plans"] == 12

    def test_make_data_paper_preset(self, output_root):
        """Test make-data runs under the paper preset."""
        assert main(["make-data", "--preset", "paper", "--n", "12", "--seed", "1"]) == 0
        resolved = yaml.safe_load((output_root / "data" / RESOLVED_NAME).read_text())
        assert resolved["preset"] == "paper"
        assert resolved["vqvae"]["layout_codebook_size"] == 6000

    def test_make_data_deterministic(self, output_root):
        """Test equal seeds write byte-identical datasets."""
        for name in ("first", "second"):
            assert main(["make-data", "--n", "12", "--seed", "5", "--out", str(output_root / name)]) == 0
        first = sorted(p.relative_to(output_root / "first") for p in (output_root / "first").rglob("*.json"))
        assert first
        assert (output_root / "first" / DATASET_MANIFEST).read_bytes() == (output_root / "second" / DATASET_MANIFEST).read_bytes()
        for relative in first:
            assert (output_root / "first" / relative).read_bytes() == (output_root / "second" / relative).read_bytes()

    def test_external(self, output_root, three_room_plan, capsys):
        """Test make-data ingests external documents."""
        source = output_root / "external"
        for i in range(12):
            write_floorplan(three_room_plan, source / f"{i:02d}.json")
        (source / "broken.json").write_text("{}")
        assert main(["make-data", "--external", str(source), "--out", str(output_root / "ext")]) == 0
        assert "Skipped 1 external plans" in capsys.readouterr().out

    def test_render(self, dataset):
        """Test render writes an SVG next to the document."""
        document = sorted((dataset / "train").glob("*.json"))[0]
        assert main(["render", str(document)]) == 0
        assert document.with_suffix(".svg").read_text().startswith("<svg")

    def test_evaluate_reference_against_itself(self, dataset, output_root, capsys):
        """Test scoring a split against itself gives zero errors."""
        train = dataset / "train"
        assert main(["evaluate", str(train), str(train), "--out", str(output_root / "eval")]) == 0
        out = capsys.readouterr().out
        assert "N        10" in out
        assert "MRG      0.000000" in out
        assert "MSE_S    0.000000" in out
        assert (output_root / "eval" / SUMMARY_NAME).exists()
        summary = json.loads((output_root / "eval" / "summary.json").read_text())
        assert summary["n_samples"] == 10

    def test_pairing_needs_references(self, dataset, output_root):
        """Test unpaired generated documents are an error."""
        empty = output_root / "empty"
        empty.mkdir()
        with pytest.raises(MetricsError):
            pair_documents(dataset / "train", empty)


@pytest.mark.slow
class TestPipeline:
    """End-to-end run of every command with tiny models."""

    def test_full_pipeline(self, dataset, output_root, capsys):
        """Test codebooks, generator, generation and evaluation chain together."""
        overlay = output_root / "tiny.yaml"
        overlay.write_text(yaml.safe_dump(TINY_RUN))
        common = ["--config", str(overlay), "--seed", "3"]

        assert main(["train-codebook", "layout", *common]) == 0
        assert main(["train-codebook", "polygon", *common]) == 0
        assert (output_root / "codebook_polygon" / CHECKPOINT_NAME).exists()
        assert main(["train-generator", *common]) == 0
        assert main(["generate", "--n", "2", *common]) == 0

        generated = output_root / "generated"
        rows = (generated / MANIFEST_NAME).read_text().splitlines()
        assert len(rows) == 1 + 2
        assert main(["evaluate", str(generated), str(dataset / "test"), *common]) == 0
        assert "N        2" in capsys.readouterr().out

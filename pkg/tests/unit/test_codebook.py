"""Unit tests for the masked VQ-VAE codebooks."""

import math
from dataclasses import replace

import pytest
import torch

from floorforge.codebook.embedding import (
    LayoutTokenizer,
    PolygonTokenizer,
    TokenBatch,
    TypeEncoding,
    collate,
    layout_samples,
    polygon_fields,
    tokenize_layout,
    tokenize_polygon,
)
from floorforge.codebook.losses import emd_loss, reconstruction_loss, vqvae_loss
from floorforge.codebook.model import Level, MaskedVQVAE, VQVAEConfig, apply_mask, sample_mask
from floorforge.codebook.quantizer import Codebook, ema_update, restart_dead_entries, vector_quantize
from floorforge.codebook.trainer import build_samples, load_codebook, save_codebook, train_codebook
from floorforge.config import resolve_config
from floorforge.core.models import RoomBox
from floorforge.data.synth import synth_dataset
from floorforge.exceptions import ConfigError, ShapeError


def token_batch(length, d_model=4):
    return TokenBatch(
        tokens=torch.zeros(1, length, d_model),
        positional=torch.zeros(length, d_model),
        padding=torch.zeros(1, length, dtype=torch.bool),
        maskable=torch.ones(1, length, dtype=torch.bool),
        targets=torch.zeros(1, length, 2, dtype=torch.long),
    )


class TestVectorQuantize:
    """Test suite for nearest-codeword lookup."""

    def test_nearest(self):
        """Test a feature snaps to the closer codeword."""
        entries = torch.tensor([[0.0, 0.0], [1.0, 1.0]])
        index, code = vector_quantize(torch.tensor([0.2, 0.1]), entries)
        assert int(index) == 0
        assert torch.equal(code, entries[0])

    def test_tie_breaks_low(self):
        """Test equidistant codewords resolve to the lowest index."""
        entries = torch.tensor([[0.0, 0.0], [2.0, 0.0]])
        index, _ = vector_quantize(torch.tensor([[1.0, 0.0]]), entries)
        assert index.tolist() == [0]

    def test_batch_shapes(self):
        """Test batched lookup returns one index and codeword per row."""
        entries = torch.randn(8, 3)
        indices, codes = vector_quantize(torch.randn(5, 3), entries)
        assert indices.shape == (5,)
        assert torch.equal(codes, entries[indices])

    def test_empty_codebook(self):
        """Test quantizing against zero codewords fails."""
        with pytest.raises(ShapeError):
            vector_quantize(torch.zeros(2), torch.zeros(0, 2))

    def test_dimension_mismatch(self):
        """Test feature and codeword widths must agree."""
        with pytest.raises(ShapeError):
            vector_quantize(torch.zeros(3), torch.zeros(4, 2))


class TestEMAUpdate:
    """Test suite for moving-average codebook updates."""

    def make_codebook(self):
        cb = Codebook(2, 2, decay=0.5, epsilon=1e-5)
        cb.entries.copy_(torch.tensor([[0.0, 0.0], [1.0, 1.0]]))
        cb.ema_sum.copy_(cb.entries)
        cb.ema_count.fill_(1.0)
        return cb

    def test_assigned_entry_moves(self):
        """Test the assigned codeword moves to the smoothed feature average."""
        cb = ema_update(self.make_codebook(), torch.tensor([0, 0]), torch.tensor([[2.0, 2.0], [4.0, 4.0]]))
        assert cb.ema_count.tolist() == pytest.approx([1.5, 0.5])
        assert cb.entries[0].tolist() == pytest.approx([2.0, 2.0], rel=1e-4)

    def test_unassigned_entry_keeps_codeword(self):
        """Test entries without assignments only decay their accumulators."""
        cb = ema_update(self.make_codebook(), torch.tensor([0]), torch.tensor([[2.0, 2.0]]))
        assert cb.entries[1].tolist() == [1.0, 1.0]
        assert cb.ema_sum[1].tolist() == pytest.approx([0.5, 0.5])

    def test_restart_dead_entries(self):
        """Test entries below the count threshold are re-seeded from features."""
        cb = self.make_codebook()
        cb.ema_count.copy_(torch.tensor([5.0, 0.1]))
        features = torch.tensor([[7.0, 7.0]])
        assert restart_dead_entries(cb, features, threshold=1.0) == 1
        assert cb.entries[1].tolist() == [7.0, 7.0]
        assert cb.entries[0].tolist() == [0.0, 0.0]
        assert restart_dead_entries(cb, features, threshold=0.0) == 0


class TestMasking:
    """Test suite for token masking."""

    def test_fixed_ratio(self):
        """Test masking half of ten tokens masks exactly five."""
        mask_embedding = torch.ones(4)
        masked, mask = apply_mask(token_batch(10), mask_embedding, 0.5, 0.5)
        assert int(mask.sum()) == 5
        assert torch.equal(masked[0, mask[0]], torch.ones(5, 4))
        assert torch.equal(masked[0, ~mask[0]], torch.zeros(5, 4))

    def test_zero_range(self):
        """Test a zero mask range masks nothing."""
        _, mask = apply_mask(token_batch(10), torch.ones(4), 0.0, 0.0)
        assert not mask.any()

    def test_at_least_one(self):
        """Test a positive lower bound masks at least one token."""
        mask = sample_mask(torch.ones(1, 3, dtype=torch.bool), 0.1, 0.1)
        assert int(mask.sum()) == 1

    def test_padding_never_masked(self):
        """Test only maskable positions are chosen."""
        maskable = torch.tensor([[True, True, False, False]])
        mask = sample_mask(maskable, 1.0, 1.0)
        assert mask.tolist() == [[True, True, False, False]]

    def test_seeded(self):
        """Test equal generator seeds choose equal positions."""
        maskable = torch.ones(4, 12, dtype=torch.bool)
        first = sample_mask(maskable, 0.3, 0.7, torch.Generator().manual_seed(3))
        second = sample_mask(maskable, 0.3, 0.7, torch.Generator().manual_seed(3))
        assert torch.equal(first, second)


class TestEMD:
    """Test suite for the squared earth mover's distance."""

    def test_identical(self):
        """Test identical distributions have zero distance."""
        p = torch.tensor([0.2, 0.5, 0.3])
        assert float(emd_loss(p, p)) == 0.0

    def test_distance_grows_with_bins(self):
        """Test mass further away costs more."""
        p = torch.tensor([1.0, 0.0, 0.0])
        near = emd_loss(p, torch.tensor([0.0, 1.0, 0.0]))
        far = emd_loss(p, torch.tensor([0.0, 0.0, 1.0]))
        assert float(near) == pytest.approx(1 / 3)
        assert float(far) == pytest.approx(2 / 3)

    def test_shape_mismatch(self):
        """Test distributions must share a shape."""
        with pytest.raises(ShapeError):
            emd_loss(torch.zeros(3), torch.zeros(4))

    def test_reconstruction_only_selected(self):
        """Test unselected positions contribute nothing."""
        probs = [torch.tensor([[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]])]
        targets = torch.tensor([[[0], [2]]])
        none = reconstruction_loss(probs, targets, torch.tensor([[True, False]]))
        some = reconstruction_loss(probs, targets, torch.tensor([[False, True]]))
        assert float(none) == 0.0
        assert float(some) == pytest.approx(2 / 3)

    def test_vqvae_loss_terms(self):
        """Test a perfect reconstruction leaves only the commitment term."""
        probs = [torch.tensor([[[0.0, 0.0, 1.0, 0.0]]])]
        targets = torch.tensor([[[2]]])
        positions = torch.tensor([[True]])
        codes = torch.zeros(1, 3)
        exact = vqvae_loss(probs, targets, positions, codes.clone(), codes, beta=0.25)
        assert float(exact.total) == 0.0
        offset = vqvae_loss(probs, targets, positions, torch.tensor([[1.0, 0.0, 0.0]]), codes, beta=0.25)
        assert float(offset.reconstruction) == 0.0
        assert float(offset.commitment) == pytest.approx(0.25)
        assert float(offset.total) == pytest.approx(0.25)


class TestTokenizers:
    """Test suite for layout and polygon embeddings."""

    def test_layout_tokens(self, three_room_plan):
        """Test one token per room."""
        tokenizer = LayoutTokenizer(6, 6, 8, 16, 20)
        tokens = tokenize_layout([room.box for room in three_room_plan.rooms], tokenizer)
        assert tokens.shape == (3, 16)

    def test_layout_tokens_differ_by_position(self):
        """Test two identical rooms differ exactly by their positional terms."""
        torch.manual_seed(0)
        tokenizer = LayoutTokenizer(6, 6, 8, 16, 20)
        box = RoomBox(2, 3, 10, 5, 1)
        with torch.no_grad():
            tokens = tokenize_layout([box, box], tokenizer)
            gamma = tokenizer.tables.positional(2)
        assert torch.allclose(tokens[0] - tokens[1], gamma[0] - gamma[1], atol=1e-6)
        assert not torch.allclose(tokens[0], tokens[1])

    def test_layout_tokens_see_every_field(self):
        """Test changing any single room field changes that room's token."""
        torch.manual_seed(0)
        tokenizer = LayoutTokenizer(6, 6, 8, 16, 20)
        base = RoomBox(2, 3, 10, 5, 1)
        with torch.no_grad():
            reference = tokenize_layout([base], tokenizer)[0]
            for changed in (
                RoomBox(4, 3, 10, 5, 1),
                RoomBox(2, 4, 10, 5, 1),
                RoomBox(2, 3, 11, 5, 1),
                RoomBox(2, 3, 10, 6, 1),
                RoomBox(2, 3, 10, 5, 2),
            ):
                assert not torch.allclose(tokenize_layout([changed], tokenizer)[0], reference)

    @pytest.mark.parametrize(
        "encoding, extra", [("I", 0), ("II", 0), ("III", 1), ("IV", 0)]
    )
    def test_polygon_tokens(self, three_room_plan, encoding, extra):
        """Test one token per vertex plus the label prefix for variant III."""
        tokenizer = PolygonTokenizer(6, 6, 8, 16, 40, TypeEncoding(encoding))
        polygon = three_room_plan.rooms[0].polygon
        assert tokenize_polygon(polygon, 0, tokenizer).shape == (len(polygon) + extra, 16)

    def test_door_column(self, three_room_plan):
        """Test the two front-door vertices are flagged."""
        rows = polygon_fields(three_room_plan.boundary, 6)
        assert rows[:, 3].tolist() == [1, 1, 0, 0, 0, 0]
        assert set(rows[:, 2].tolist()) == {6}

    def test_door_tag_changes_embedding(self, three_room_plan):
        """Test variant II embeds door vertices differently from variant I."""
        torch.manual_seed(0)
        tokenizer = PolygonTokenizer(6, 6, 8, 16, 40, TypeEncoding.DOOR_TAG)
        rows = polygon_fields(three_room_plan.boundary, 6)
        fields, lengths = collate([rows], 40)
        tagged = tokenizer(fields, lengths).tokens
        tokenizer.encoding = TypeEncoding.UNIFORM
        plain = tokenizer(fields, lengths).tokens
        assert not torch.allclose(tagged[0, :2], plain[0, :2])
        assert torch.allclose(tagged[0, 2:], plain[0, 2:])

    def test_collate_errors(self):
        """Test empty batches and over-long samples are rejected."""
        with pytest.raises(ShapeError):
            collate([], 20)
        with pytest.raises(ShapeError):
            collate([torch.zeros(21, 5, dtype=torch.long).numpy()], 20)


class TestMaskedVQVAE:
    """Test suite for the model forward and decode paths."""

    def test_distributions_normalized(self, three_room_plan, tiny_vqvae_config):
        """Test every field head returns probability distributions."""
        model = MaskedVQVAE(tiny_vqvae_config, Level.LAYOUT, 6).eval()
        fields, lengths = collate(layout_samples([three_room_plan]), model.max_len)
        out = model(fields, lengths, generator=torch.Generator().manual_seed(0))
        assert len(out["probs"]) == 5
        for probs in out["probs"]:
            assert torch.allclose(probs.sum(dim=-1), torch.ones(probs.shape[:-1]), atol=1e-5)
        assert out["indices"].shape == (1,)

    def test_prefix_variant_forward(self, three_room_plan, tiny_vqvae_config):
        """Test the prefix label token is never masked."""
        config = replace(tiny_vqvae_config, type_encoding="III")
        model = MaskedVQVAE(config, Level.POLYGON, 6)
        samples = build_samples(Level.POLYGON, [three_room_plan])
        fields, lengths = collate(samples, model.max_len)
        out = model(fields, lengths, generator=torch.Generator().manual_seed(0), mask_ratio=1.0)
        assert not out["positions"][:, 0].any()
        assert out["probs"][0].shape[1] == fields.shape[1] + 1

    def test_masked_positions_hidden_from_code(self, three_room_plan, tiny_vqvae_config):
        """Test the pooled feature ignores the content of masked rooms."""
        torch.manual_seed(0)
        model = MaskedVQVAE(tiny_vqvae_config, Level.LAYOUT, 6).eval()
        fields, lengths = collate(layout_samples([three_room_plan]), model.max_len)
        with torch.no_grad():
            first = model(fields, lengths, generator=torch.Generator().manual_seed(4), mask_ratio=0.5)
            mask = first["positions"]
            assert mask.any() and (~mask).any()

            edited = fields.clone()
            edited[mask] = (edited[mask] + 1) % torch.tensor([64, 64, 64, 64, 6])
            second = model(edited, lengths, generator=torch.Generator().manual_seed(4), mask_ratio=0.5)
            assert torch.equal(second["positions"], mask)
            assert torch.allclose(first["features"], second["features"], atol=1e-6)

            visible = fields.clone()
            visible[~mask] = (visible[~mask] + 1) % torch.tensor([64, 64, 64, 64, 6])
            third = model(visible, lengths, generator=torch.Generator().manual_seed(4), mask_ratio=0.5)
            assert not torch.allclose(first["features"], third["features"], atol=1e-6)

    def test_without_masked_skip_sees_everything(self, three_room_plan, tiny_vqvae_config):
        """Test the unmasked variant scores every room and encodes its content."""
        model = MaskedVQVAE(replace(tiny_vqvae_config, masked_skip=False), Level.LAYOUT, 6).eval()
        fields, lengths = collate(layout_samples([three_room_plan]), model.max_len)
        with torch.no_grad():
            out = model(fields, lengths)
            assert out["positions"].all()
            edited = fields.clone()
            edited[0, 0, 0] = (edited[0, 0, 0] + 1) % 64
            assert not torch.allclose(out["features"], model(edited, lengths)["features"], atol=1e-6)

    def test_decode_code(self, tiny_vqvae_config):
        """Test decoding a codeword yields the requested length."""
        model = MaskedVQVAE(tiny_vqvae_config, Level.POLYGON, 6)
        assert model.decode_code(0, 4).shape == (4, 2)
        with pytest.raises(ShapeError):
            model.decode_code(tiny_vqvae_config.codebook_size, 4)

    def test_decode_masked_shapes(self, tiny_vqvae_config):
        """Test decoding returns one normalized distribution per field and checks shapes."""
        model = MaskedVQVAE(tiny_vqvae_config, Level.LAYOUT, 6).eval()
        d = tiny_vqvae_config.d_model
        padding = torch.zeros(2, 5, dtype=torch.bool)
        with torch.no_grad():
            probs = model.decode_masked(torch.randn(2, d), torch.randn(2, 5, d), padding)
        assert [p.shape[-1] for p in probs] == [64, 64, 64, 64, 6]
        for p in probs:
            assert torch.allclose(p.sum(-1), torch.ones(2, 5), atol=1e-6)
        with pytest.raises(ShapeError):
            model.decode_masked(torch.randn(3, d), torch.randn(2, 5, d), padding)

    def test_empty_sequence(self, tiny_vqvae_config):
        """Test encoding a sequence with no valid tokens fails."""
        model = MaskedVQVAE(tiny_vqvae_config, Level.LAYOUT, 6)
        fields = torch.zeros(1, 2, 5, dtype=torch.long)
        with pytest.raises(ShapeError):
            model.encode_pool(model.tokenize(fields, torch.tensor([0])))


class TestVQVAEConfig:
    """Test suite for configuration checks."""

    def test_bad_mask_range(self):
        """Test lo must not exceed hi."""
        with pytest.raises(ConfigError):
            VQVAEConfig(mask_lo=0.8, mask_hi=0.2)

    def test_heads_divide_width(self):
        """Test d_model must split evenly across heads."""
        with pytest.raises(ConfigError):
            VQVAEConfig(d_model=30, heads=4)

    def test_unknown_encoding(self):
        """Test type encodings are I to IV."""
        with pytest.raises(ConfigError):
            VQVAEConfig(type_encoding="V")

    def test_from_dict(self, tiny_vqvae_config):
        """Test dictionaries round-trip and unknown keys fail."""
        assert VQVAEConfig.from_dict(tiny_vqvae_config.to_dict()) == tiny_vqvae_config
        with pytest.raises(ConfigError):
            VQVAEConfig.from_dict({"depth": 3})


class TestTrainCodebook:
    """Test suite for the training loop and checkpoints."""

    def test_polygon_samples(self, synth_plans):
        """Test polygon samples cover every room and boundary."""
        samples = build_samples(Level.POLYGON, synth_plans)
        assert len(samples) == sum(len(fp.rooms) + 1 for fp in synth_plans)

    def test_short_run(self, synth_plans, tiny_vqvae_config):
        """Test a short run records finite stats per epoch."""
        model, stats = train_codebook("layout", synth_plans, tiny_vqvae_config, seed=0)
        assert len(stats.records) == tiny_vqvae_config.epochs
        assert all(math.isfinite(loss) for loss in stats.losses())
        assert 0.0 < stats.records[-1]["utilization"] <= 1.0
        assert not model.training

    def test_seeded_runs_agree(self, synth_plans, tiny_vqvae_config):
        """Test equal seeds give equal losses."""
        _, first = train_codebook("layout", synth_plans, tiny_vqvae_config, seed=5)
        _, second = train_codebook("layout", synth_plans, tiny_vqvae_config, seed=5)
        assert first.losses() == pytest.approx(second.losses(), rel=1e-5)

    def test_empty_plans(self, tiny_vqvae_config):
        """Test training on nothing fails."""
        with pytest.raises(ShapeError):
            train_codebook("layout", [], tiny_vqvae_config)

    def test_bits_mismatch(self, synth_plans, tiny_vqvae_config):
        """Test the config grid must match the data grid."""
        with pytest.raises(ConfigError):
            train_codebook("layout", synth_plans, replace(tiny_vqvae_config, bits=7))

    def test_checkpoint_roundtrip(self, synth_plans, tiny_vqvae_config, temp_workspace):
        """Test a saved codebook reloads with identical codes."""
        model, stats = train_codebook("polygon", synth_plans, tiny_vqvae_config, seed=1)
        path = save_codebook(model, temp_workspace / "cb" / "polygon.pt", synth_plans[0].room_types, 1, stats)
        loaded, meta = load_codebook(path)
        samples = build_samples(Level.POLYGON, synth_plans)
        assert loaded.encode_indices(samples) == model.encode_indices(samples)
        assert meta["level"] == "polygon"
        assert meta["seed"] == 1
        assert len(meta["history"]) == tiny_vqvae_config.epochs

    def test_load_errors(self, temp_workspace):
        """Test missing and foreign checkpoints are rejected."""
        with pytest.raises(FileNotFoundError):
            load_codebook(temp_workspace / "missing.pt")
        torch.save({"kind": "other"}, temp_workspace / "other.pt")
        with pytest.raises(ConfigError):
            load_codebook(temp_workspace / "other.pt")

    @pytest.mark.slow
    def test_desk_layout_overfit(self):
        """Test the desk layout codebook halves its loss on 64 plans and uses a quarter of its entries."""
        config = resolve_config("desk")
        plans = synth_dataset(config.synth_params(), 64)
        model, stats = train_codebook("layout", plans, replace(config.vqvae_config("layout"), epochs=200), seed=0)
        losses = stats.losses()
        assert losses[-1] <= 0.5 * losses[0]
        assert stats.records[-1]["utilization"] >= 0.25


class TestBruteForce:
    """Brute-force checks of the numerical kernels."""

    def test_emd_matches_cumulative_sums(self):
        """Test EMD against a plain-loop evaluation on random pairs."""
        gen = torch.Generator().manual_seed(0)
        for _ in range(50):
            bins = int(torch.randint(2, 65, (1,), generator=gen))
            p = torch.softmax(torch.randn(bins, generator=gen, dtype=torch.float64), dim=0)
            target = int(torch.randint(bins, (1,), generator=gen))
            q = torch.zeros(bins, dtype=torch.float64)
            q[target] = 1.0
            expected, cp, cq = 0.0, 0.0, 0.0
            for c in range(bins):
                cp += float(p[c])
                cq += float(q[c])
                expected += (cp - cq) ** 2
            assert float(emd_loss(p, q)) == pytest.approx(expected / bins, abs=1e-9)

    def test_emd_gradient(self):
        """Test the analytic gradient against finite differences."""
        q = torch.tensor([0.0, 0.0, 1.0, 0.0, 0.0], dtype=torch.float64)
        p = torch.softmax(torch.randn(5, dtype=torch.float64), dim=0).requires_grad_(True)
        assert torch.autograd.gradcheck(lambda x: emd_loss(x, q), (p,), eps=1e-6, rtol=1e-4)

    def test_quantize_matches_exhaustive_scan(self):
        """Test nearest-codeword indices against a loop, ties included."""
        gen = torch.Generator().manual_seed(1)
        for trial in range(200):
            size = int(torch.randint(1, 513, (1,), generator=gen))
            entries = torch.randint(-3, 4, (size, 3), generator=gen).to(torch.float32)
            features = torch.randint(-3, 4, (4, 3), generator=gen).to(torch.float32)
            indices, _ = vector_quantize(features, entries)
            for row, feature in enumerate(features):
                distances = [float(((feature - e) ** 2).sum()) for e in entries]
                assert int(indices[row]) == distances.index(min(distances)), trial

    def test_ema_fixed_point(self):
        """Test frozen assignments drive codewords to their cluster means."""
        gen = torch.Generator().manual_seed(2)
        centers = torch.tensor([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]])
        assignment = torch.arange(4).repeat_interleave(16)
        features = centers[assignment] + 0.3 * torch.randn(64, 2, generator=gen)
        means = torch.stack([features[assignment == k].mean(dim=0) for k in range(4)])

        cb = Codebook(4, 2, decay=0.99)
        for _ in range(2000):
            ema_update(cb, assignment, features)
        assert float(torch.linalg.norm(cb.entries - means, dim=1).max()) < 1e-3

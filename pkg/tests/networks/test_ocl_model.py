import copy

import pytest
import torch

from gdrlab.core.exceptions import ConfigurationError, ShapeError
from gdrlab.models.pipeline_models import DatasetInfo
from gdrlab.resources.codebooks import build_codebook
from gdrlab.resources.networks import build_model
from gdrlab.utils.indexing import tuple_to_natural


def random_images(count, side, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(count, 3, side, side, generator=generator) * 2 - 1


class TestImageModel:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_slate_shapes(self, tiny_model):
        out = tiny_model(random_images(2, 32))
        assert out.attention.shape == (2, 1, 5, 64)
        assert out.logits.shape == (2, 1, 64, 64)
        assert out.loss.dim() == 0

    @pytest.mark.pc
    def test_targets_are_natural_indexes_of_tokens(self, tiny_model):
        out = tiny_model(random_images(2, 32))
        frame = out.frames[0]
        expected = tuple_to_natural(frame.tokens.hard, tiny_model.layout).reshape(2, -1)
        assert torch.equal(frame.target, expected)

    @pytest.mark.pc
    def test_tokenization_is_deterministic(self, tiny_model):
        images = random_images(2, 32)
        assert torch.equal(tiny_model.tokenize(images).hard, tiny_model.tokenize(images).hard)

    @pytest.mark.pc
    def test_plus_variant_attends_over_pixels(self, tiny_config, variant_factory):
        model = build_model(variant_factory("SLATE_PLUS"), tiny_config)
        out = model(random_images(2, 32))
        assert out.attention.shape == (2, 1, 5, 32 * 32)
        assert model.extra_encode(random_images(1, 32)).shape == (1, tiny_config.channel_dim, 32, 32)

    @pytest.mark.pc
    def test_single_group_grouped_codebook_matches_baseline(self, tiny_config, variant_factory):
        config = type(tiny_config)(**{**tiny_config.to_record(), "num_groups": 1, "dim_multiplier": 1,
                                      "use_codebook_layernorm": False})
        torch.manual_seed(0)
        baseline = build_model(variant_factory(groups=1, config=config), config).eval()

        grouped_model = copy.deepcopy(baseline)
        grouped = build_codebook(baseline.layout, config, force_grouped=True)
        grouped.identity_projection_().copy_table_(baseline.codebook.table.weight)
        grouped_model.dvae.codebook = grouped
        grouped_model.dvae.decoder.embedding = grouped

        images = random_images(2, 32)
        with torch.no_grad():
            expected = baseline(images).loss
            actual = grouped_model(images).loss
        assert abs(expected.item() - actual.item()) < 1e-6

    @pytest.mark.nc
    def test_image_variant_rejects_video(self, tiny_model):
        with pytest.raises(ShapeError):
            tiny_model(torch.zeros(1, 2, 3, 32, 32))

    @pytest.mark.nc
    def test_capabilities_are_gated(self, tiny_model):
        with pytest.raises(ConfigurationError):
            tiny_model.extra_encode(random_images(1, 32))
        out = tiny_model(random_images(1, 32))
        with pytest.raises(ConfigurationError):
            tiny_model.predict_next_query(out.frames[0].slots)


class TestVideoModel:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_steve_plus_with_condition_queries(self, tiny_config, variant_factory):
        torch.manual_seed(0)
        variant = variant_factory("STEVE_PLUS", groups=4, query_mode="condition")
        model = build_model(variant, tiny_config)
        images = random_images(6, 32).reshape(2, 3, 3, 32, 32)
        boxes = torch.rand(2, 3, tiny_config.num_slots, 4, generator=torch.Generator().manual_seed(0))

        out = model(images, boxes=boxes)
        assert variant.layout.g == 4
        assert len(out.frames) == 3
        assert out.attention.shape == (2, 3, 5, 32 * 32)
        assert out.logits.shape == (2, 3, 64, 64)

    @pytest.mark.pc
    def test_queries_come_from_predictor_after_first_frame(self, tiny_config, variant_factory):
        torch.manual_seed(0)
        model = build_model(variant_factory("STEVE"), tiny_config)
        images = random_images(4, 32).reshape(2, 2, 3, 32, 32)
        out = model(images)
        query = model.predict_next_query(out.frames[0].slots)
        replay = model.forward_frame(images[:, 1], query)
        assert torch.allclose(replay.slots.slots, out.frames[1].slots.slots, atol=1e-6)

    @pytest.mark.nc
    def test_condition_queries_need_boxes(self, tiny_config, variant_factory):
        model = build_model(variant_factory("STEVE", query_mode="condition"), tiny_config)
        with pytest.raises(ConfigurationError):
            model(torch.zeros(1, 2, 3, 32, 32))

    @pytest.mark.nc
    def test_video_variant_rejects_images(self, tiny_config, variant_factory):
        model = build_model(variant_factory("STEVE"), tiny_config)
        with pytest.raises(ShapeError):
            model(random_images(1, 32))


class TestBuildModel:

    @pytest.mark.pc
    def test_matching_data(self, tiny_config, variant_factory):
        info = DatasetInfo(is_video=False, has_boxes=True, resolution=32, max_objects=4)
        assert build_model(variant_factory(), tiny_config, info).layout.g == 2

    @pytest.mark.nc
    @pytest.mark.parametrize("architecture, query_mode, info", [
        ("SLATE", "random", DatasetInfo(is_video=True, resolution=32, max_objects=3)),
        ("STEVE", "random", DatasetInfo(is_video=False, resolution=32, max_objects=3)),
        ("SLATE", "random", DatasetInfo(resolution=64, max_objects=3)),
        ("SLATE", "random", DatasetInfo(resolution=32, max_objects=5)),
        ("SLATE", "condition", DatasetInfo(resolution=32, max_objects=3, has_boxes=False)),
    ], ids=["video-data", "image-data", "resolution", "too-many-objects", "no-boxes"])
    def test_incompatible_data(self, tiny_config, variant_factory, architecture, query_mode, info):
        with pytest.raises(ConfigurationError):
            build_model(variant_factory(architecture, query_mode=query_mode), tiny_config, info)

    @pytest.mark.nc
    def test_layout_must_address_every_code(self, tiny_config, variant_factory):
        with pytest.raises(ConfigurationError):
            build_model(variant_factory(), type(tiny_config)())

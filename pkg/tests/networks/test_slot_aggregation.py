import numpy as np
import pytest
import torch
from PIL import Image

from gdrlab.core.exceptions import EmptyInputError, ShapeError, ValidationError
from gdrlab.models.slot_models import SENTINEL_BOX, ConditionPrior
from gdrlab.resources.networks import (ConditionQueryInit, ExtraEncoder, GridPositionEmbedding, RandomQueryInit,
                                       SlotAttention, SlotPredictor, export_masks, masks_from_attention)


class TestQueryInit:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_random_queries_collapse_to_means_at_zero_sigma(self):
        init = RandomQueryInit(num_slots=5, channel_dim=16)
        query = init(3, 0.0)
        assert query.shape == (3, 5, 16)
        assert torch.equal(query[0], init.mu)
        assert torch.equal(query[1], query[2])

    @pytest.mark.pc
    def test_random_queries_follow_generator(self):
        init = RandomQueryInit(num_slots=5, channel_dim=16)
        first = init(2, 1.0, torch.Generator().manual_seed(3))
        second = init(2, 1.0, torch.Generator().manual_seed(3))
        assert torch.equal(first, second)
        assert not torch.equal(first, init(2, 0.0))

    @pytest.mark.pc
    def test_scale_is_not_trained(self):
        init = RandomQueryInit(num_slots=5, channel_dim=16)
        assert init.mu.requires_grad
        assert not init.scale.requires_grad

    @pytest.mark.pc
    def test_condition_queries(self):
        init = ConditionQueryInit(channel_dim=16)
        prior = ConditionPrior.from_pixels([(0, 0, 8, 8), (16, 16, 32, 32)], frame_size=32, num_slots=4)
        assert prior.boxes.shape == (1, 4, 4)
        assert prior.boxes[0, 1].tolist() == [0.5, 0.5, 1.0, 1.0]
        assert prior.boxes[0, 3].tolist() == list(SENTINEL_BOX)
        assert init(prior).shape == (1, 4, 16)

    @pytest.mark.nc
    def test_negative_sigma(self):
        with pytest.raises(ValidationError):
            RandomQueryInit(2, 4)(1, -0.1)

    @pytest.mark.nc
    def test_too_many_boxes(self):
        with pytest.raises(ValidationError):
            ConditionPrior.from_pixels([(0, 0, 1, 1)] * 3, frame_size=8, num_slots=2)

    @pytest.mark.nc
    def test_boxes_outside_frame(self):
        with pytest.raises(ValidationError):
            ConditionPrior.from_pixels([(0, 0, 40, 8)], frame_size=32, num_slots=2)
        with pytest.raises(ValidationError):
            ConditionQueryInit(8)(ConditionPrior(torch.full((1, 2, 4), 1.5)))


class TestSlotAttention:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_attention_normalized_over_slots(self):
        torch.manual_seed(0)
        module = SlotAttention(channel_dim=16, mlp_hidden=32)
        result = module(torch.randn(2, 4, 16), torch.randn(2, 25, 16), num_iter=3)

        assert result.slots.shape == (2, 4, 16)
        assert result.attention.shape == (2, 4, 25)
        assert result.num_iterations_used == 3
        assert torch.allclose(result.attention.sum(dim=1), torch.ones(2, 25), atol=1e-5)

    @pytest.mark.pc
    def test_slot_order_is_equivariant(self):
        torch.manual_seed(0)
        module = SlotAttention(channel_dim=16, mlp_hidden=32)
        query, features = torch.randn(1, 4, 16), torch.randn(1, 9, 16)
        permutation = torch.tensor([2, 0, 3, 1])
        plain = module(query, features, 2)
        permuted = module(query[:, permutation], features, 2)
        assert torch.allclose(plain.slots[:, permutation], permuted.slots, atol=1e-5)

    @pytest.mark.nc
    def test_no_slots(self):
        with pytest.raises(EmptyInputError):
            SlotAttention(8)(torch.zeros(1, 0, 8), torch.zeros(1, 4, 8), 1)

    @pytest.mark.nc
    def test_no_iterations(self):
        with pytest.raises(ValidationError):
            SlotAttention(8)(torch.zeros(1, 2, 8), torch.zeros(1, 4, 8), 0)


class TestModules:

    @pytest.mark.pc
    def test_extra_encoder_keeps_resolution(self):
        assert ExtraEncoder(16, hidden=8)(torch.zeros(2, 3, 12, 12)).shape == (2, 16, 12, 12)

    @pytest.mark.pc
    def test_position_embedding_is_additive(self):
        embedding = GridPositionEmbedding(6, 4)
        features = torch.randn(2, 6, 4)
        assert torch.allclose(embedding(features) - features, embedding.embedding.expand(2, -1, -1))

    @pytest.mark.pc
    def test_predictor_keeps_slot_shape(self):
        assert SlotPredictor(16, num_heads=2)(torch.randn(3, 5, 16)).shape == (3, 5, 16)


class TestMasks:

    @pytest.mark.pc
    def test_argmax_over_slots(self):
        attention = torch.tensor([[[0.7, 0.2, 0.1, 0.5], [0.3, 0.8, 0.9, 0.5]]])
        labels = masks_from_attention(attention, (2, 2))
        assert labels.tolist() == [[[0, 1], [1, 0]]]

    @pytest.mark.pc
    def test_ties_go_to_lowest_slot(self):
        labels = masks_from_attention(torch.full((1, 3, 4), 1 / 3), (2, 2))
        assert labels.sum() == 0

    @pytest.mark.pc
    def test_nearest_upsampling(self):
        attention = torch.tensor([[[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]]])
        labels = masks_from_attention(attention, (2, 2), output_size=8)
        assert labels.shape == (1, 8, 8)
        assert labels[0, :4, 4:].unique().tolist() == [1]
        assert labels[0, 4:, 4:].unique().tolist() == [0]

    @pytest.mark.nc
    @pytest.mark.parametrize("output_size", [5, 3])
    def test_output_size_not_a_multiple(self, output_size):
        with pytest.raises(ShapeError):
            masks_from_attention(torch.rand(1, 2, 4), (2, 2), output_size=output_size)

    @pytest.mark.nc
    def test_grid_mismatch(self):
        with pytest.raises(ShapeError):
            masks_from_attention(torch.rand(1, 2, 6), (2, 2))

    @pytest.mark.pc
    def test_export_masks(self, tmp_path):
        labels = torch.tensor([[[0, 1], [2, 3]]])
        paths = export_masks(labels, tmp_path, prefix="pred")
        assert [p.name for p in paths] == ["pred_0000.png"]
        assert np.array_equal(np.asarray(Image.open(paths[0])), labels[0].numpy().astype(np.uint8))

import math

import pytest
import torch

from gdrlab.core.exceptions import ConfigurationError, IndexRangeError
from gdrlab.models.codebook_models import GroupLayout
from gdrlab.resources.presets import Layouts
from gdrlab.utils.indexing import balanced_sizes, natural_to_tuple, tuple_to_natural

ALL_LAYOUTS = [Layouts.G1, Layouts.G2, Layouts.G4, Layouts.G8]


class TestIndexing:

    @pytest.mark.smoke
    @pytest.mark.pc
    @pytest.mark.parametrize("sizes", ALL_LAYOUTS, ids=["g1", "g2", "g4", "g8"])
    def test_bijection_over_all_codes(self, sizes):
        layout = GroupLayout(sizes, 1)
        assert math.prod(sizes) == 4096

        natural = torch.arange(layout.n)
        tuples = natural_to_tuple(natural, layout)
        assert tuples.shape == (4096, layout.g)
        assert torch.equal(tuple_to_natural(tuples, layout), natural)
        # разные натуральные индексы дают разные кортежи
        assert len({tuple(row) for row in tuples.tolist()}) == 4096

    @pytest.mark.pc
    def test_least_significant_group_first(self):
        layout = GroupLayout(Layouts.G2, 1)
        assert tuple_to_natural((1, 0), layout) == 1
        assert tuple_to_natural((0, 1), layout) == 64
        assert tuple_to_natural((63, 63), layout) == 4095
        assert natural_to_tuple(65, layout) == (1, 1)

    @pytest.mark.pc
    def test_mixed_radix(self):
        layout = GroupLayout(Layouts.G8, 1)
        assert layout.radices == (1, 2, 4, 8, 16, 64, 256, 1024)
        assert tuple_to_natural((1, 1, 1, 1, 3, 3, 3, 3), layout) == 4095

    @pytest.mark.pc
    def test_scalar_and_tensor_agree(self):
        layout = GroupLayout(Layouts.G4, 1)
        for index in (0, 7, 511, 4095):
            assert tuple(natural_to_tuple(torch.tensor(index), layout).tolist()) == natural_to_tuple(index, layout)

    @pytest.mark.nc
    @pytest.mark.parametrize("tuple_index", [(64, 0), (0, -1), (1, 2, 3)])
    def test_tuple_out_of_range(self, tuple_index):
        with pytest.raises(IndexRangeError):
            tuple_to_natural(tuple_index, GroupLayout(Layouts.G2, 1))

    @pytest.mark.nc
    @pytest.mark.parametrize("index", [-1, 4096])
    def test_natural_out_of_range(self, index):
        layout = GroupLayout(Layouts.G2, 1)
        with pytest.raises(IndexRangeError):
            natural_to_tuple(index, layout)
        with pytest.raises(IndexRangeError):
            natural_to_tuple(torch.tensor([index]), layout)


class TestBalancedSizes:

    @pytest.mark.pc
    @pytest.mark.parametrize("num_code, g, expected", [
        (4096, 1, (4096,)),
        (4096, 2, (64, 64)),
        (4096, 4, (8, 8, 8, 8)),
        (4096, 8, (2, 2, 2, 2, 4, 4, 4, 4)),
        (64, 2, (8, 8)),
        (64, 4, (2, 2, 4, 4)),
        (12, 2, (3, 4)),
    ])
    def test_sizes(self, num_code, g, expected):
        sizes = balanced_sizes(num_code, g)
        assert sizes == expected
        assert math.prod(sizes) == num_code

    @pytest.mark.pc
    def test_matches_presets(self):
        for g, sizes in Layouts.BY_GROUPS.items():
            assert balanced_sizes(4096, g) == sizes

    @pytest.mark.nc
    @pytest.mark.parametrize("num_code, g", [(6, 3), (7, 2), (4096, 0)])
    def test_impossible_split(self, num_code, g):
        with pytest.raises(ConfigurationError):
            balanced_sizes(num_code, g)

import pytest

from gdrlab.core.config import dump_config, load_config, read_config_file
from gdrlab.core.exceptions import ConfigurationError
from gdrlab.models.codebook_models import GroupLayout
from gdrlab.models.config_models import GlobalConfig, QueryMode, Variant
from gdrlab.resources.presets import Layouts


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "lab.ini"
    path.write_text(
        "# desk run\n"
        "codebook.num_groups = 4\n"
        "model.variant = SLATE_PLUS\n"
        "model.query_mode = condition\n"
        "train.scale_factor = 0.1\n"
        "train.seed = 1\n"
        "codebook.use_utilization_loss = off\n",
        encoding="utf-8",
    )
    return path


class TestGlobalConfig:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_defaults(self):
        config = GlobalConfig()
        assert config.token_resolution == 16
        assert config.num_iter == 3
        assert config.batch_size == 32
        assert config.scaled(25000) == 25000

    @pytest.mark.pc
    def test_video_batch_and_condition_iterations(self):
        config = GlobalConfig(variant="STEVE", query_mode="condition")
        assert config.variant is Variant.STEVE
        assert config.batch_size == 8
        assert config.num_iter == 1

    @pytest.mark.pc
    def test_layout_from_config(self):
        config = GlobalConfig()
        layout = GroupLayout.from_config(Layouts.G2, config)
        assert layout.sub_dim == 8 * 256 // 2
        assert GroupLayout.from_config(Layouts.G1, config).sub_dim == 256

    @pytest.mark.nc
    @pytest.mark.parametrize("kwargs", [
        {"input_resolution": 30},
        {"dim_multiplier": 3},
        {"num_code": 0},
        {"scale_factor": 0.0},
        {"scale_factor": 1.5},
        {"channel_dim": 250, "num_groups": 8, "dim_multiplier": 1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            GlobalConfig(**kwargs)

    @pytest.mark.nc
    def test_layout_product_must_match(self):
        with pytest.raises(ConfigurationError):
            GroupLayout.from_config((64, 32), GlobalConfig())


class TestLoadConfig:

    @pytest.mark.pc
    def test_file_values(self, config_file):
        config = load_config(config_file, env={})
        assert config.num_groups == 4
        assert config.variant is Variant.SLATE_PLUS
        assert config.query_mode is QueryMode.CONDITION
        assert config.scale_factor == 0.1
        assert config.use_utilization_loss is False

    @pytest.mark.pc
    def test_layer_precedence(self, config_file):
        config = load_config(config_file, env={"GDRLAB_SEED": "3", "GDRLAB_NUM_SLOTS": "7"})
        assert config.seed == 3
        assert config.num_slots == 7

        config = load_config(config_file, env={"GDRLAB_SEED": "3"}, overrides={"seed": 9, "num_groups": None})
        assert config.seed == 9
        assert config.num_groups == 4

    @pytest.mark.pc
    def test_dump_and_reload(self, tmp_path, tiny_config):
        path = dump_config(tiny_config, tmp_path / "dumped.ini")
        assert load_config(path, env={}) == tiny_config

    @pytest.mark.nc
    @pytest.mark.parametrize("line", [
        "codebook.unknown_field = 1",
        "model.num_code = 64",
        "train.seed = three",
        "data.single_object = maybe",
    ])
    def test_bad_file(self, tmp_path, line):
        path = tmp_path / "bad.ini"
        path.write_text(line + "\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(path, env={})

    @pytest.mark.nc
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_config_file(tmp_path / "absent.ini")

    @pytest.mark.nc
    def test_unknown_override(self):
        with pytest.raises(ConfigurationError):
            load_config(env={}, overrides={"learning_rate": 1.0})

    @pytest.mark.nc
    def test_invariant_checked_after_layering(self):
        with pytest.raises(ConfigurationError):
            load_config(env={"GDRLAB_INPUT_RESOLUTION": "30"})

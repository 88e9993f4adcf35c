import pytest
import torch
from dotenv import load_dotenv

from gdrlab.core.context import LabContext
from gdrlab.models.codebook_models import GroupLayout
from gdrlab.models.config_models import GlobalConfig
from gdrlab.models.pipeline_models import ModelVariant
from gdrlab.resources.presets import Presets
from gdrlab.utils.generators import Generates

#   Загрузка переменных окружения из .env файла (GDRLAB_LOG_LEVEL и т.п.)
load_dotenv()

#   Маленькая конфигурация: всё считается на CPU за секунды
TINY_CONFIG = dict(
    input_resolution=32, num_slots=5, num_code=64, channel_dim=32, num_groups=2, dim_multiplier=2,
    dvae_hidden=16, extra_hidden=16, slot_mlp_hidden=32, decoder_blocks=1, decoder_heads=2, predictor_blocks=1,
    image_batch=4, video_batch=2, dvae_steps=6, dvae_warmup=1, dvae_interval=3,
    ocl_steps=6, ocl_warmup=1, ocl_interval=3, seed=0,
)


def make_config(**overrides) -> GlobalConfig:
    return GlobalConfig(**{**TINY_CONFIG, **overrides})


@pytest.fixture
def tiny_config():
    """
    Свежая маленькая конфигурация на каждый тест.

    Example:
        def test_example(tiny_config):
            assert tiny_config.token_resolution == 8
    """
    return make_config()


@pytest.fixture
def lab_context(tiny_config, tmp_path):
    """Контекст с каталогом прогона во временной папке. Хранилища закрываются после теста."""
    with LabContext(tiny_config, run_dir=tmp_path / "run") as context:
        yield context


@pytest.fixture
def tiny_layout(tiny_config):
    return GroupLayout.from_config((8, 8), tiny_config)


@pytest.fixture
def tiny_model(lab_context):
    """SLATE g2 с random-запросами на маленькой конфигурации"""
    torch.manual_seed(0)
    return lab_context.tools_manager.trainer.build()


@pytest.fixture
def variant_factory(tiny_config):
    """Функция, собирающая ModelVariant по архитектуре, числу групп и режиму запросов."""
    from gdrlab.tools.trainer_tools import layout_sizes

    def make(architecture="SLATE", groups=2, query_mode="random", config=None):
        config = config or tiny_config
        layout = GroupLayout.from_config(layout_sizes(config.num_code, groups), config)
        return ModelVariant(architecture, layout, query_mode)

    return make


@pytest.fixture
def torch_generator():
    return Generates.torch_generator(1234)


@pytest.fixture
def numpy_rng():
    return Generates.numpy_rng(1234)


@pytest.fixture(scope="session")
def store_factory(tmp_path_factory):
    """
    Фикстура пакует маленькие синтетические хранилища один раз на сессию.

    Returns:
        Callable: make(preset, num, video=False, single_object=False, frames=6) -> путь к хранилищу

    Example:
        def test_example(store_factory):
            path = store_factory(Presets.DESK, 8)
    """
    cache = {}
    root = tmp_path_factory.mktemp("stores")

    def make(preset: str = Presets.DESK, num: int = 8, video: bool = False, single_object: bool = False,
             frames: int = 6):
        key = (preset, num, video, single_object, frames)
        if key not in cache:
            name = f"{preset}_{num}_{'video' if video else 'image'}{'_single' if single_object else ''}_{frames}"
            with LabContext(make_config(), run_dir=root / "gen") as context:
                cache[key] = context.tools_manager.data.generate_dataset(
                    preset, num, root / name, video=video, frames=frames, seed=7, single_object=single_object)
        return cache[key]

    return make


@pytest.fixture(scope="session")
def image_store(store_factory):
    return store_factory(Presets.DESK, 8)


@pytest.fixture(scope="session")
def video_store(store_factory):
    return store_factory(Presets.DESK, 4, video=True)

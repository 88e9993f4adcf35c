from pathlib import Path
from typing import Optional

import torch

from gdrlab.core.exceptions import ConfigurationError
from gdrlab.core.logger import logger
from gdrlab.models.codebook_models import GroupLayout
from gdrlab.models.config_models import GlobalConfig
from .base import CodebookStrategy
from .baseline import BaselineCodebook
from .grouped import GroupedCodebook

CODEBOOK_FORMAT_VERSION = 1


def build_codebook(layout: GroupLayout, config: GlobalConfig, force_grouped: bool = False) -> CodebookStrategy:
    """Выбор стратегии: g = 1 -> базовая таблица, иначе группированный кодбук."""
    if layout.is_baseline and not force_grouped:
        codebook = BaselineCodebook(layout, config.channel_dim)
    else:
        codebook = GroupedCodebook(layout, config.channel_dim, use_layernorm=config.use_codebook_layernorm)
    logger.debug(f"Codebook {type(codebook).__name__} for layout {layout.label()}, d={layout.sub_dim}")
    return codebook


def save_codebook(codebook: CodebookStrategy, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    use_layernorm = isinstance(codebook, GroupedCodebook) and not isinstance(codebook.post_norm, torch.nn.Identity)
    torch.save({
        "version": CODEBOOK_FORMAT_VERSION,
        "kind": "grouped" if isinstance(codebook, GroupedCodebook) else "baseline",
        "sizes": list(codebook.layout.sizes),
        "sub_dim": codebook.layout.sub_dim,
        "channel_dim": codebook.channel_dim,
        "layernorm": use_layernorm,
        "state_dict": codebook.state_dict(),
    }, path)
    return path


def load_codebook(path, map_location: Optional[str] = "cpu") -> CodebookStrategy:
    blob = torch.load(path, map_location=map_location, weights_only=True)
    if blob.get("version") != CODEBOOK_FORMAT_VERSION:
        raise ConfigurationError("unsupported codebook checkpoint version", {"version": blob.get("version")})

    layout = GroupLayout(tuple(blob["sizes"]), blob["sub_dim"])
    if blob["kind"] == "grouped":
        codebook = GroupedCodebook(layout, blob["channel_dim"], use_layernorm=blob["layernorm"])
    else:
        codebook = BaselineCodebook(layout, blob["channel_dim"])
    codebook.load_state_dict(blob["state_dict"])
    return codebook

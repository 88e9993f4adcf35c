from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn.functional as F
from einops import rearrange
from torch import nn

from gdrlab.core.exceptions import ShapeError
from gdrlab.models.codebook_models import GroupLayout, TokenGrid
from gdrlab.resources.codebooks import CodebookStrategy, gumbel_sample, one_hot_grid


class DVAEEncoder(nn.Module):
    """CNN с понижением разрешения ровно в 4 раза: два шага stride 2 и 1x1 свёртка в sum a_i каналов."""

    def __init__(self, layout: GroupLayout, hidden: int = 64):
        super().__init__()
        self.layout = layout
        self.net = nn.Sequential(
            nn.Conv2d(3, hidden, 3, 1, 1), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 4, 2, 1), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 3, 1, 1), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 4, 2, 1), nn.ReLU(),
            nn.Conv2d(hidden, layout.total, 1),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.net(image)


class DVAEDecoder(nn.Module):
    """
    Обратное повышение разрешения x4 (nearest + свёртки).
    Входной эмбеддинг мягких вероятностей это мягкий lookup кодбука,
    то есть линейное 1x1 отображение Z_s.
    """

    def __init__(self, embedding: CodebookStrategy, channel_dim: int, hidden: int = 64):
        super().__init__()
        self.embedding = embedding
        self.net = nn.Sequential(
            nn.Conv2d(channel_dim, hidden, 1), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 3, 1, 1), nn.ReLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(hidden, hidden, 3, 1, 1), nn.ReLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(hidden, hidden, 3, 1, 1), nn.ReLU(),
            nn.Conv2d(hidden, 3, 1),
        )

    def forward(self, soft: torch.Tensor) -> torch.Tensor:
        embedded = self.embedding.soft_lookup(soft)
        return self.net(rearrange(embedded, 'b h w c -> b c h w'))


@dataclass
class DVAEOutput:
    logits: torch.Tensor
    tokens: TokenGrid
    reconstruction: torch.Tensor


class DVAE(nn.Module):
    def __init__(self, layout: GroupLayout, codebook: CodebookStrategy, input_resolution: int, hidden: int = 64):
        super().__init__()
        self.layout = layout
        self.input_resolution = input_resolution
        self.codebook = codebook
        self.encoder = DVAEEncoder(layout, hidden)
        self.decoder = DVAEDecoder(codebook, codebook.channel_dim, hidden)

    @property
    def token_resolution(self) -> int:
        return self.input_resolution // 4

    def encode(self, image: torch.Tensor) -> torch.Tensor:
        if image.dim() != 4 or tuple(image.shape[1:]) != (3, self.input_resolution, self.input_resolution):
            raise ShapeError("image does not match the configured resolution",
                             {"shape": tuple(image.shape), "resolution": self.input_resolution})
        return self.encoder(image)

    def decode(self, soft: torch.Tensor) -> torch.Tensor:
        side = self.token_resolution
        if soft.dim() != 4 or tuple(soft.shape[1:]) != (side, side, self.layout.total):
            raise ShapeError("soft grid does not match the token resolution and layout",
                             {"shape": tuple(soft.shape), "expected": (side, side, self.layout.total)})
        return self.decoder(soft)

    def tokenize(self, image: torch.Tensor, tau: float,
                 generator: Optional[torch.Generator] = None, noise_free: bool = False) -> TokenGrid:
        return gumbel_sample(self.encode(image), self.layout, tau, generator, hard_noise_free=noise_free)

    def one_hot(self, tokens: TokenGrid) -> torch.Tensor:
        return one_hot_grid(tokens.hard, self.layout, dtype=tokens.soft.dtype)

    def decode_hard(self, tokens: TokenGrid) -> torch.Tensor:
        """Декодирование one-hot сетки из жёстких кортежей."""
        return self.decode(self.one_hot(tokens))

    def forward(self, image: torch.Tensor, tau: float,
                generator: Optional[torch.Generator] = None, noise_free: bool = False) -> DVAEOutput:
        logits = self.encode(image)
        tokens = gumbel_sample(logits, self.layout, tau, generator, hard_noise_free=noise_free)
        return DVAEOutput(logits=logits, tokens=tokens, reconstruction=self.decode(tokens.soft))


def encode(model: DVAE, image: torch.Tensor, layout: GroupLayout) -> torch.Tensor:
    if layout.sizes != model.layout.sizes:
        raise ShapeError("layout does not match the encoder", {"layout": layout.sizes, "encoder": model.layout.sizes})
    return model.encode(image)


def recon_loss(reconstruction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if reconstruction.shape != target.shape:
        raise ShapeError("reconstruction and target shapes differ",
                         {"reconstruction": tuple(reconstruction.shape), "target": tuple(target.shape)})
    return F.mse_loss(reconstruction, target)

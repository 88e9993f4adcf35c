"""
Сборка модели OCL из частей: dVAE (+ кодбук) -> Slot Attention -> каузальный декодер токенов.

Варианты:
    SLATE       наивная архитектура
    SLATE_PLUS  + extra encoder как key/value для Slot Attention
    STEVE       + рекуррентный предиктор запросов между кадрами
    STEVE_PLUS  и то и другое
"""
from dataclasses import dataclass
from typing import List, Optional

import torch
from einops import rearrange
from torch import nn

from gdrlab.core.exceptions import ConfigurationError, ShapeError
from gdrlab.core.logger import logger
from gdrlab.models.config_models import GlobalConfig, QueryMode
from gdrlab.models.codebook_models import TokenGrid
from gdrlab.models.pipeline_models import DatasetInfo, ModelVariant
from gdrlab.models.slot_models import ConditionPrior, SlotSet
from gdrlab.resources.codebooks import build_codebook
from .autoregressive_decoder import TokenDecoder, classification_loss
from .dvae import DVAE
from .slot_aggregation import (ConditionQueryInit, ExtraEncoder, GridPositionEmbedding, RandomQueryInit,
                               SlotAttention, SlotPredictor)

# τ на валидации и при токенизации замороженным dVAE
TEST_TAU = 0.1


@dataclass
class FrameOutput:
    slots: SlotSet
    logits: torch.Tensor        # (B, N, n)
    target: torch.Tensor        # (B, N) натуральные индексы
    tokens: TokenGrid


@dataclass
class OCLOutput:
    frames: List[FrameOutput]
    loss: torch.Tensor

    @property
    def attention(self) -> torch.Tensor:
        """(B, T, K, N)"""
        return torch.stack([f.slots.attention for f in self.frames], dim=1)

    @property
    def logits(self) -> torch.Tensor:
        return torch.stack([f.logits for f in self.frames], dim=1)

    @property
    def target(self) -> torch.Tensor:
        return torch.stack([f.target for f in self.frames], dim=1)


class OCLModel(nn.Module):
    def __init__(self, variant: ModelVariant, config: GlobalConfig):
        super().__init__()
        self.variant = variant
        self.config = config
        layout = variant.layout
        c = config.channel_dim
        side = config.token_resolution

        codebook = build_codebook(layout, config)
        self.dvae = DVAE(layout, codebook, config.input_resolution, config.dvae_hidden)

        if variant.architecture.has_extra_encoder:
            self.extra_encoder = ExtraEncoder(c, config.extra_hidden)
            feature_positions = config.input_resolution ** 2
        else:
            self.extra_encoder = None
            feature_positions = side * side
        self.feature_position = GridPositionEmbedding(feature_positions, c)

        if variant.query_mode is QueryMode.CONDITION:
            self.query_init = ConditionQueryInit(c)
        else:
            self.query_init = RandomQueryInit(config.num_slots, c)

        self.slot_attention = SlotAttention(c, config.slot_mlp_hidden)
        self.predictor = (SlotPredictor(c, config.decoder_heads, config.predictor_blocks)
                          if variant.architecture.is_video else None)
        self.token_decoder = TokenDecoder(side * side, c, layout.n, config.decoder_blocks, config.decoder_heads)
        self.pretrained_stage1 = False

    @property
    def layout(self):
        return self.variant.layout

    @property
    def codebook(self):
        return self.dvae.codebook

    @property
    def num_iter(self) -> int:
        return self.variant.query_mode.num_iter

    def discretizer_parameters(self):
        """Параметры dVAE вместе с кодбуком (кодбук - часть декодера dVAE)."""
        return self.dvae.parameters()

    def ocl_parameters(self):
        frozen = {id(p) for p in self.dvae.parameters()}
        return [p for p in self.parameters() if id(p) not in frozen]

    def freeze_discretizer(self) -> None:
        for p in self.dvae.parameters():
            p.requires_grad_(False)
        self.dvae.eval()

    def train(self, mode: bool = True):
        super().train(mode)
        # замороженный dVAE всегда остаётся в eval
        if not any(p.requires_grad for p in self.dvae.parameters()):
            self.dvae.eval()
        return self

    def extra_encode(self, image: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) -> (B, c, H, W). Только для вариантов с extra encoder."""
        if self.extra_encoder is None:
            raise ConfigurationError("extra encoder is available only for the plus variants",
                                     {"variant": self.variant.architecture.value})
        return self.extra_encoder(image)

    def predict_next_query(self, slots: SlotSet) -> torch.Tensor:
        if self.predictor is None:
            raise ConfigurationError("next-query prediction is available only for video variants",
                                     {"variant": self.variant.architecture.value})
        return self.predictor(slots.slots)

    def initial_query(self, batch_size: int, sigma: float = 0.0, generator: Optional[torch.Generator] = None,
                      prior: Optional[ConditionPrior] = None) -> torch.Tensor:
        if self.variant.query_mode is QueryMode.CONDITION:
            if prior is None:
                raise ConfigurationError("condition queries need bounding boxes")
            return self.query_init(prior)
        return self.query_init(batch_size, sigma, generator)

    def tokenize(self, image: torch.Tensor) -> TokenGrid:
        """Детерминированная токенизация: argmax без шума, τ на тестовом значении."""
        return self.dvae.tokenize(image, TEST_TAU, noise_free=True)

    def discrete_features(self, tokens: TokenGrid) -> torch.Tensor:
        """X после проекции кодбука в растровом порядке: (B, N, c)"""
        return rearrange(self.codebook.lookup(tokens), 'b h w c -> b (h w) c')

    def aggregation_features(self, image: torch.Tensor, discrete: torch.Tensor) -> torch.Tensor:
        if self.extra_encoder is not None:
            features = rearrange(self.extra_encode(image), 'b c h w -> b (h w) c')
        else:
            features = discrete
        return self.feature_position(features)

    def forward_frame(self, image: torch.Tensor, query: torch.Tensor) -> FrameOutput:
        tokens = self.tokenize(image)
        discrete = self.discrete_features(tokens)
        slots = self.slot_attention(query, self.aggregation_features(image, discrete), self.num_iter)
        logits = self.token_decoder(discrete, slots.slots)
        target = tokens.natural.reshape(tokens.natural.shape[0], -1)
        return FrameOutput(slots=slots, logits=logits, target=target, tokens=tokens)

    def forward(self, images: torch.Tensor, sigma: float = 0.0, generator: Optional[torch.Generator] = None,
                boxes: Optional[torch.Tensor] = None) -> OCLOutput:
        """
        images: (B, 3, H, W) для SLATE или (B, T, 3, H, W) для STEVE.
        boxes: (B, K, 4) или (B, T, K, 4); для видео запрос строится по боксам первого кадра,
        дальше запросы приходят из предиктора.
        """
        is_video = self.variant.architecture.is_video
        if is_video and images.dim() != 5:
            raise ShapeError("video variants expect (B, T, 3, H, W) input", {"shape": tuple(images.shape)})
        if not is_video and images.dim() != 4:
            raise ShapeError("image variants expect (B, 3, H, W) input", {"shape": tuple(images.shape)})

        frames = images.unbind(dim=1) if is_video else (images,)
        prior = None
        if boxes is not None and self.variant.query_mode is QueryMode.CONDITION:
            prior = ConditionPrior(boxes[:, 0] if is_video else boxes)

        query = self.initial_query(images.shape[0], sigma, generator, prior)
        outputs = []
        for frame in frames:
            out = self.forward_frame(frame, query)
            outputs.append(out)
            if is_video:
                query = self.predict_next_query(out.slots)

        loss = torch.stack([classification_loss(o.logits, o.target) for o in outputs]).mean()
        return OCLOutput(frames=outputs, loss=loss)


def build_model(variant: ModelVariant, config: GlobalConfig, dataset_info: Optional[DatasetInfo] = None) -> OCLModel:
    """
    Собирает модель и проверяет согласованность варианта, конфига и данных.

    Raises:
        ConfigurationError: несовместимая комбинация (например, condition-запросы без боксов).
    """
    if variant.layout.n != config.num_code:
        raise ConfigurationError("layout does not address num_code codes",
                                 {"layout": variant.layout.sizes, "num_code": config.num_code})
    if dataset_info is not None:
        if variant.query_mode is QueryMode.CONDITION and not dataset_info.has_boxes:
            raise ConfigurationError("condition queries need bounding boxes in the data",
                                     {"variant": variant.label()})
        if variant.architecture.is_video != dataset_info.is_video:
            raise ConfigurationError("architecture and data modality do not match",
                                     {"variant": variant.architecture.value, "video_data": dataset_info.is_video})
        if dataset_info.resolution != config.input_resolution:
            raise ConfigurationError("data resolution differs from input_resolution",
                                     {"data": dataset_info.resolution, "config": config.input_resolution})
        if dataset_info.max_objects >= config.num_slots:
            raise ConfigurationError("num_slots must cover every object plus the background",
                                     {"objects": dataset_info.max_objects, "num_slots": config.num_slots})

    model = OCLModel(variant, config)
    logger.info(f"Built {variant.label()}: "
                f"{sum(p.numel() for p in model.parameters())} parameters")
    return model

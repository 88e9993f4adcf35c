from .dvae import DVAE, DVAEEncoder, DVAEDecoder, DVAEOutput, encode, recon_loss
from .slot_aggregation import (RandomQueryInit, ConditionQueryInit, ExtraEncoder, GridPositionEmbedding,
                               SlotAttention, SlotPredictor, masks_from_attention, export_masks)
from .autoregressive_decoder import TokenDecoder, bos_shift, classification_loss, next_token_accuracy
from .ocl_model import OCLModel, OCLOutput, FrameOutput, build_model, TEST_TAU

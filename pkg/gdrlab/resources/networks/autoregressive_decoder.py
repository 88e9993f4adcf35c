import torch
import torch.nn.functional as F
from torch import nn

from gdrlab.core.exceptions import EmptyInputError, IndexRangeError, ShapeError


def bos_shift(sequence: torch.Tensor, bos: torch.Tensor) -> torch.Tensor:
    """
    X' = x_BOS || X[:-1] по оси последовательности.

    Args:
        sequence: (B, N, c) в растровом порядке.
        bos: (c,) обучаемый вектор.
    """
    if sequence.shape[1] == 0:
        raise EmptyInputError("cannot shift an empty token sequence")
    head = bos.reshape(1, 1, -1).expand(sequence.shape[0], 1, sequence.shape[2])
    return torch.cat([head, sequence[:, :-1]], dim=1)


class TokenDecoder(nn.Module):
    """
    Каузальный transformer decoder: self-attention по токенам с маской,
    cross-attention к слотам, feedforward. Readout - линейный слой в n классов,
    softmax свёрнут в лосс.
    """

    def __init__(self, num_tokens: int, channel_dim: int, num_code: int,
                 num_blocks: int = 4, num_heads: int = 4):
        super().__init__()
        self.num_tokens = num_tokens
        self.bos = nn.Parameter(torch.zeros(channel_dim))
        nn.init.normal_(self.bos, std=0.02)
        self.position = nn.Parameter(torch.zeros(1, num_tokens, channel_dim))
        nn.init.trunc_normal_(self.position, std=0.02)

        layer = nn.TransformerDecoderLayer(d_model=channel_dim, nhead=num_heads, dim_feedforward=4 * channel_dim,
                                           dropout=0.0, batch_first=True, norm_first=True)
        self.blocks = nn.TransformerDecoder(layer, num_layers=num_blocks)
        self.norm = nn.LayerNorm(channel_dim)
        self.readout_layer = nn.Linear(channel_dim, num_code)
        self.register_buffer("causal_mask", nn.Transformer.generate_square_subsequent_mask(num_tokens),
                             persistent=False)

    def shift(self, sequence: torch.Tensor) -> torch.Tensor:
        return bos_shift(sequence, self.bos)

    def decode_tokens(self, shifted: torch.Tensor, slots: torch.Tensor) -> torch.Tensor:
        """Y[i] зависит только от shifted[0..i] и слотов."""
        length = shifted.shape[1]
        if length > self.num_tokens:
            raise ShapeError("sequence longer than the position table", {"N": length, "max": self.num_tokens})
        mask = self.causal_mask[:length, :length].to(shifted.dtype)
        hidden = shifted + self.position[:, :length].to(shifted.dtype)
        hidden = self.blocks(hidden, slots, tgt_mask=mask, tgt_is_causal=True)
        return self.norm(hidden)

    def readout(self, y: torch.Tensor) -> torch.Tensor:
        return self.readout_layer(y)

    def forward(self, sequence: torch.Tensor, slots: torch.Tensor) -> torch.Tensor:
        return self.readout(self.decode_tokens(self.shift(sequence), slots))


def classification_loss(logits: torch.Tensor, target_natural: torch.Tensor) -> torch.Tensor:
    """Средняя кросс-энтропия по позициям. logits (..., n), target (...)"""
    num_code = logits.shape[-1]
    if bool(((target_natural < 0) | (target_natural >= num_code)).any()):
        raise IndexRangeError("target index outside [0, n)", {"n": num_code})
    return F.cross_entropy(logits.reshape(-1, num_code), target_natural.reshape(-1).long())


def next_token_accuracy(logits: torch.Tensor, target_natural: torch.Tensor) -> float:
    return (logits.argmax(dim=-1) == target_natural).float().mean().item()

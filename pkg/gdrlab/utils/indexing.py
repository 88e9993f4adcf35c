"""
Перевод кортежных индексов групп в натуральные и обратно.

Смешанная система счисления, младшая группа первой:
    natural = t_1 + t_2*a_1 + t_3*a_1*a_2 + ...
Для одинаковых a_i это ровно Z^1*a^0 + Z^2*a^1 + ...
"""
import math
from collections import Counter
from typing import Sequence, Tuple, Union

import torch

from gdrlab.core.exceptions import ConfigurationError, IndexRangeError
from gdrlab.models.codebook_models import GroupLayout

TupleLike = Union[Sequence[int], torch.Tensor]


def tuple_to_natural(tuple_index: TupleLike, layout: GroupLayout):
    """Кортеж (или тензор (..., g)) -> натуральный индекс (или тензор (...))."""
    if isinstance(tuple_index, torch.Tensor):
        if tuple_index.shape[-1] != layout.g:
            raise IndexRangeError("tuple length does not match layout",
                                  {"got": tuple_index.shape[-1], "g": layout.g})
        sizes = torch.tensor(layout.sizes, device=tuple_index.device)
        if bool(((tuple_index < 0) | (tuple_index >= sizes)).any()):
            raise IndexRangeError("tuple element outside its group", {"sizes": layout.sizes})
        radices = torch.tensor(layout.radices, device=tuple_index.device, dtype=torch.long)
        return (tuple_index.long() * radices).sum(dim=-1)

    digits = [int(t) for t in tuple_index]
    if len(digits) != layout.g:
        raise IndexRangeError("tuple length does not match layout", {"got": len(digits), "g": layout.g})
    for i, (t, a) in enumerate(zip(digits, layout.sizes)):
        if not 0 <= t < a:
            raise IndexRangeError("tuple element outside its group", {"group": i, "value": t, "size": a})
    return sum(t * r for t, r in zip(digits, layout.radices))


def natural_to_tuple(index, layout: GroupLayout):
    """Натуральный индекс (или тензор) -> кортеж (или тензор (..., g))."""
    if isinstance(index, torch.Tensor):
        if bool(((index < 0) | (index >= layout.n)).any()):
            raise IndexRangeError("natural index outside [0, n)", {"n": layout.n})
        digits = []
        rest = index.long()
        for a in layout.sizes:
            digits.append(rest % a)
            rest = torch.div(rest, a, rounding_mode="floor")
        return torch.stack(digits, dim=-1)

    index = int(index)
    if not 0 <= index < layout.n:
        raise IndexRangeError("natural index outside [0, n)", {"index": index, "n": layout.n})
    digits = []
    for a in layout.sizes:
        index, digit = divmod(index, a)
        digits.append(digit)
    return tuple(digits)


def balanced_sizes(num_code: int, g: int) -> Tuple[int, ...]:
    """
    Размеры групп для g групп и num_code кодов.

    Точный корень степени g, если он есть; иначе простые множители раздаются
    жадно самой «лёгкой» группе, результат по возрастанию. Для 4096 и g=8 даёт
    (2, 2, 2, 2, 4, 4, 4, 4).
    """
    if g < 1 or num_code < 1:
        raise ConfigurationError("g and num_code must be positive", {"g": g, "num_code": num_code})
    if g == 1:
        return (num_code,)
    root = round(num_code ** (1.0 / g))
    if root ** g == num_code:
        return (root,) * g

    primes = []
    rest, p = num_code, 2
    while p * p <= rest:
        while rest % p == 0:
            primes.append(p)
            rest //= p
        p += 1
    if rest > 1:
        primes.append(rest)
    if len(primes) < g:
        raise ConfigurationError("num_code has fewer prime factors than groups",
                                 {"num_code": num_code, "g": g, "factors": dict(Counter(primes))})

    groups = [1] * g
    for prime in sorted(primes, reverse=True):
        groups[groups.index(min(groups))] *= prime
    sizes = tuple(sorted(groups))
    assert math.prod(sizes) == num_code
    return sizes

"""Three-parameter logistic item response model."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParams


@dataclass(frozen=True)
class IrtParams:
    a: float          # discrimination, > 0
    b: float          # difficulty (50% threshold above guessing)
    c: float = 0.0    # guessing floor, in [0, 1)

    def __post_init__(self):
        if not math.isfinite(self.a) or self.a <= 0:
            raise InvalidParams(f"discrimination a must be > 0, got {self.a}")
        if not math.isfinite(self.b):
            raise InvalidParams("difficulty b must be finite")
        if not 0 <= self.c < 1 or not math.isfinite(self.c):
            raise InvalidParams(f"guessing c must be in [0, 1), got {self.c}")


def irt_probability(theta: float, params: IrtParams) -> float:
    """P(correct | theta) = c + (1 - c) / (1 + e^(-a (theta - b))).

    Strictly increasing in theta, with limits c and 1; at theta == b the
    value is exactly c + (1 - c) / 2.
    """
    if not math.isfinite(theta):
        raise InvalidParams("theta must be finite")
    z = -params.a * (theta - params.b)
    if z > 700:  # e^z would overflow; the logistic term is ~0 here
        return params.c
    return params.c + (1.0 - params.c) / (1.0 + math.exp(z))

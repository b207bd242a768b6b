"""Annulus parameters in the two conventions used throughout.

``AnnulusParam`` describes ``{r < |z| < 1/r}``; ``AnnulusQ`` describes
``{q < |z| < 1}``. Scaling by ``r`` maps the first onto the second with
``q = r**2``.
"""
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class AnnulusParam:
    r: float

    def __post_init__(self):
        if not (0.0 < self.r < 1.0):
            raise ValueError(f"annulus radius must lie in (0, 1), got {self.r!r}")

    @property
    def mu(self):
        return self.r ** -2 + self.r ** 2

    @property
    def nu(self):
        return self.r ** -2 - self.r ** 2

    @property
    def L(self):
        """Half-width of the strip covering the annulus, ``ln(1/r)``."""
        return math.log(1.0 / self.r)

    def to_q(self):
        return AnnulusQ(self.r ** 2)


@dataclass(frozen=True)
class AnnulusQ:
    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise ValueError(f"annulus inner radius must lie in (0, 1), got {self.q!r}")

    def to_r(self):
        return AnnulusParam(math.sqrt(self.q))

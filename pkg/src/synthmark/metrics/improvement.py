"""Signed improvement factor of a reference technique over an alternative."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ImprovementFactor:
    perfect: float
    delta_ref: float
    delta_alt: float
    value: float

    def __str__(self) -> str:
        return format_if(self.value)


def improvement_factor(s_perfect: float, s_ref: float, s_alt: float) -> ImprovementFactor:
    """IF = delta_alt / delta_ref when the alternative is no better, else -delta_ref / delta_alt.

    Each delta is the distance from the perfect score. A perfect reference
    against an imperfect alternative gives +inf; the reverse gives -inf;
    two perfect scores give +1.
    """
    d_ref = abs(s_perfect - s_ref)
    d_alt = abs(s_perfect - s_alt)
    if d_ref == 0 and d_alt == 0:
        value = 1.0
    elif d_alt >= d_ref:
        value = math.inf if d_ref == 0 else d_alt / d_ref
    else:
        value = -math.inf if d_alt == 0 else -d_ref / d_alt
    return ImprovementFactor(s_perfect, d_ref, d_alt, value)


def format_if(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.1f}x"

"""Numerical tolerances shared across the package."""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Tolerance bundle.

    Attributes:
        rank: relative singular-value cutoff; ``s > rank * s_max`` counts as nonzero.
        psd: eigenvalues ``>= -psd`` count as nonnegative.
        herm: absolute bound on ``max |M - M^dagger|`` for Hermitian inputs.
        mono: absolute trace-norm increase that counts as a monotonicity violation.
    """

    rank: float = 1e-10
    psd: float = 1e-9
    herm: float = 1e-10
    mono: float = 1e-8

    def __post_init__(self):
        for name in ("rank", "psd", "herm", "mono"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name!r} must be positive")

    def with_(self, **overrides) -> "Tolerances":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


DEFAULT_TOL = Tolerances()
DEFAULT_SEED = 42

"""Bridge configuration."""

from __future__ import annotations

from dataclasses import dataclass

RATED_SIDES = ("source", "target", "pair")


@dataclass(frozen=True)
class BridgeConfig:
    """How the wrapped model is loaded and fed.

    rated_side controls what single-text rating models see ("target" by
    default: the fine-tuning output side); pair models always get both.
    declared_range mirrors the wrapped model's documented output and is
    enforced on every emitted score.
    """

    model: str = "mock"
    batch_size: int = 8
    device: str = "cpu"
    rated_side: str = "target"
    declared_range: tuple[float, float] | None = (0.0, 1.0)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.rated_side not in RATED_SIDES:
            raise ValueError(
                f"rated_side must be one of {RATED_SIDES}, got {self.rated_side!r}"
            )
        if self.declared_range is not None:
            lo, hi = self.declared_range
            if not lo < hi:
                raise ValueError(f"declared range must satisfy lo < hi, got [{lo}, {hi}]")

"""
Seed model for deterministic, splittable random streams.
"""

from pydantic import Field

from .base import Base


class RngSeed(Base):
    """A (master seed, stream index) pair naming one independent random stream."""

    master_seed: int = Field(ge=0, lt=2**64)
    stream_index: int = Field(default=0, ge=0)

    def stream(self, index: int) -> "RngSeed":
        """Seed for a sibling stream under the same master seed (e.g. trial ``index``)."""
        return RngSeed(master_seed=self.master_seed, stream_index=index)

    def __repr__(self) -> str:
        return f"<RngSeed(master_seed={self.master_seed}, stream_index={self.stream_index})>"

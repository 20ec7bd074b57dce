"""Server configuration."""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_MAX_SEQ_LEN = 100


@dataclass(frozen=True)
class SidecarConfig:
    """How the model is loaded and how long a sequence it may see.

    ``max_seq_len`` caps the window the backend tags; tokens past it are
    labeled O by the server and the response carries ``truncated: true``.
    """

    model: str = ""
    device: str = "cpu"
    max_seq_len: int = DEFAULT_MAX_SEQ_LEN
    batch_size: int = 8

    def __post_init__(self) -> None:
        if self.max_seq_len < 1:
            raise ValueError(f"max_seq_len must be >= 1, got {self.max_seq_len}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

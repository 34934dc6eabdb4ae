"""Recurrent entity network: world generation, training and inspection."""

from ._entnet import (
    EntNetError,
    Model,
    generate_world,
    gradient_check,
    resolve_config,
    train,
    world_oracle,
)

__all__ = [
    "EntNetError",
    "Model",
    "generate_world",
    "gradient_check",
    "resolve_config",
    "train",
    "world_oracle",
]

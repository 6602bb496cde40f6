"""
Attention registry: mechanisms are looked up by the name stored in
ModelConfig.attention_kind.
"""
from typing import Dict, Type

from attention.base import AttentionMechanism
from models import ModelConfig


class AttentionRegistry:
    """Registry for all attention mechanisms."""

    _mechanisms: Dict[str, Type[AttentionMechanism]] = {}

    @classmethod
    def register(cls, name: str):
        """
        Decorator to register a mechanism.
        Usage:
            @AttentionRegistry.register("global")
            class GlobalAttention(AttentionMechanism):
                ...
        """
        def decorator(mechanism_class: Type[AttentionMechanism]):
            cls._mechanisms[name] = mechanism_class
            mechanism_class.name = name
            return mechanism_class
        return decorator

    @classmethod
    def get(cls, config: ModelConfig) -> AttentionMechanism:
        """Build the mechanism named by ``config.attention_kind``."""
        if config.attention_kind not in cls._mechanisms:
            raise KeyError(f"No attention mechanism registered as '{config.attention_kind}'")
        return cls._mechanisms[config.attention_kind](config)

    @classmethod
    def list_mechanisms(cls) -> list[str]:
        return list(cls._mechanisms.keys())


def build_attention(config: ModelConfig) -> AttentionMechanism:
    # importing the module registers the built-in mechanisms
    import attention.mechanisms  # noqa: F401
    return AttentionRegistry.get(config)

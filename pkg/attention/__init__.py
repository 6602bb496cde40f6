"""Attention mechanisms and their building blocks."""
from attention.base import AttentionMechanism, AttentionOutput, AttentionQuery
from attention.functions import ScoreMeter, vision_span
from attention.mechanisms import FlexibleAttention, GlobalAttention, LocalAttention, flexible_attend
from attention.registry import AttentionRegistry, build_attention

__all__ = [
    "AttentionMechanism",
    "AttentionOutput",
    "AttentionQuery",
    "AttentionRegistry",
    "FlexibleAttention",
    "GlobalAttention",
    "LocalAttention",
    "ScoreMeter",
    "build_attention",
    "flexible_attend",
    "vision_span",
]

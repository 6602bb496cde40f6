"""
Base class for attention mechanisms.
"""
from dataclasses import dataclass, field
from typing import List, Optional

from autodiff.tensor import Tensor
from models import AttentionStep, ModelConfig
from network.params import ModelParams
from network.seq2seq import EncoderStates


@dataclass
class AttentionQuery:
    """Inputs of one attention step for a batch of decoder rows."""
    h_prev: Tensor
    feedback: Tensor
    enc: EncoderStates
    p_prev: Optional[Tensor] = None
    step: int = 1


@dataclass
class AttentionOutput:
    context: Tensor
    focus: Optional[Tensor] = None
    strength: Optional[Tensor] = None
    records: List[AttentionStep] = field(default_factory=list)


class AttentionMechanism:
    """Base class for all attention mechanisms."""

    name: str = "base_attention"
    description: str = "Base attention class"

    def __init__(self, config: ModelConfig):
        self.config = config

    def attend(self, query: AttentionQuery, params: ModelParams, tau: Optional[float] = None,
               meter=None, record: bool = False) -> AttentionOutput:
        """
        Computes the context vector. ``tau=None`` is training mode (full
        window, batched); a float (``inf`` included) is test mode.
        Override in subclasses.
        """
        raise NotImplementedError("Subclasses must implement attend()")

    def __str__(self):
        return f"<{self.__class__.__name__}>"

    def __repr__(self):
        return self.__str__()

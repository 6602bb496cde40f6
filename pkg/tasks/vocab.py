"""
Token <-> id mapping with the four reserved ids.
"""
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from models import EOS_ID, PAD_ID, RESERVED_TOKENS, UNK_ID
from utils.errors import IdRangeError, TaskSpecError

FIRST_ID = len(RESERVED_TOKENS)


class Vocab:
    """Bijective over non-reserved tokens; ids 0-3 are PAD, BOS, EOS, UNK."""

    def __init__(self, tokens: Iterable[str]):
        self._tokens: List[str] = list(RESERVED_TOKENS)
        self._ids: Dict[str, int] = {t: i for i, t in enumerate(RESERVED_TOKENS)}
        for token in tokens:
            if token in self._ids:
                raise TaskSpecError(f"duplicate vocabulary token '{token}'")
            self._ids[token] = len(self._tokens)
            self._tokens.append(token)

    @classmethod
    def for_task(cls, prefix: str, size: int) -> "Vocab":
        """``prefix1`` .. ``prefix<size>``: token N gets id N + 3."""
        return cls(f"{prefix}{n}" for n in range(1, size + 1))

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._tokens == other._tokens

    def token_id(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._tokens):
            raise IdRangeError(f"id {token_id} outside [0, {len(self._tokens)})")
        return self._tokens[token_id]

    def encode(self, tokens: Sequence[str]) -> Tuple[List[int], int]:
        """Ids for ``tokens`` and the number of unknown tokens mapped to UNK."""
        ids = [self.token_id(t) for t in tokens]
        unknown = sum(1 for t, i in zip(tokens, ids) if i == UNK_ID and t != RESERVED_TOKENS[UNK_ID])
        return ids, unknown

    def decode(self, ids: Sequence[int]) -> List[str]:
        """Tokens up to (not including) the first EOS; PAD is dropped."""
        out = []
        for i in ids:
            if i == EOS_ID:
                break
            if i != PAD_ID:
                out.append(self.token(int(i)))
        return out

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(t + "\n" for t in self._tokens[FIRST_ID:]), encoding="utf-8", newline="\n")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines)

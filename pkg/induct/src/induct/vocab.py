"""Output token vocabulary: the 181 delta tokens in a fixed order,
plus a begin-of-sequence id used only on the decoder input side."""

from __future__ import annotations

from .data import DIRS


def _signed(v: int) -> str:
    return f"{v:+d}"


def _offset(v: int) -> str:
    return f"{v:+d}" if v else "0"


def build_vocab() -> list[str]:
    vocab = [f"AgentRow={_signed(v)}" for v in range(-19, 20)]
    vocab += [f"AgentCol={_signed(v)}" for v in range(-19, 20)]
    vocab += [f"HeroDir={d}" for d in DIRS]
    vocab += [f"MarkerRow={_offset(v)}" for v in range(-19, 20)]
    vocab += [f"MarkerCol={_offset(v)}" for v in range(-19, 20)]
    vocab += [f"MarkerCount={_signed(v)}" for v in range(-10, 11) if v]
    vocab.append("END")
    return vocab


VOCAB = build_vocab()
VOCAB_SIZE = len(VOCAB)  # 181
TOKEN_TO_ID = {token: i for i, token in enumerate(VOCAB)}
END_ID = TOKEN_TO_ID["END"]
BOS_ID = VOCAB_SIZE  # decoder-input-only symbol
MAX_DECODE_LEN = 64


def encode_tokens(tokens: list[str]) -> list[int]:
    return [TOKEN_TO_ID[t] for t in tokens]


def decode_ids(ids: list[int]) -> list[str]:
    return [VOCAB[i] for i in ids]

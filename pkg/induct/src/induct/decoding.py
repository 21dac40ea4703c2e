"""Greedy and subset-ensembled decoding into delta token lines."""

from __future__ import annotations

import torch

from .data import GridWorld
from .models import MetaInductionModel, PlainInductionModel
from .training import Example, input_tensor, pair_tensor
from .vocab import BOS_ID, END_ID, MAX_DECODE_LEN, VOCAB


def _greedy_from_states(
    decoder, encodings: torch.Tensor, combine: bool = False
) -> tuple[list[int], list[float]]:
    """Greedy decode a single sequence. `encodings` holds one row per
    ensemble member; per-step log-probabilities are summed across
    members before the argmax, which reduces to plain greedy decoding
    when there is a single row."""
    members = encodings.shape[0]
    state = decoder.initial_state(encodings)
    tokens = torch.full((members,), BOS_ID, dtype=torch.long)
    out_ids: list[int] = []
    out_logprobs: list[float] = []
    for _ in range(MAX_DECODE_LEN):
        logits, state = decoder.step(tokens, state, encodings)
        logprobs = torch.log_softmax(logits, dim=-1)
        combined = logprobs.sum(dim=0)
        token_id = int(combined.argmax())
        out_ids.append(token_id)
        out_logprobs.append(float(combined[token_id]) / members)
        if token_id == END_ID:
            break
        tokens = torch.full((members,), token_id, dtype=torch.long)
    return out_ids, out_logprobs


def greedy_decode_plain(
    model: PlainInductionModel, eval_input: GridWorld
) -> tuple[str, list[float]]:
    model.eval()
    with torch.no_grad():
        encoding = model.encoding(input_tensor([eval_input]))
        ids, logprobs = _greedy_from_states(model.decoder, encoding)
    return " ".join(VOCAB[i] for i in ids), logprobs


def decode_ensemble(
    model: MetaInductionModel,
    demonstrations: list[Example],
    eval_input: GridWorld,
    subsets: list[tuple[int, ...]],
) -> tuple[str, list[float]]:
    """Condition on each k-subset of the demonstrations, sum per-token
    log-probabilities across the subsets, decode greedily over the
    combined scores. A single-subset plan is exactly a plain
    conditioned decode."""
    model.eval()
    with torch.no_grad():
        eval_grid = input_tensor([eval_input])
        pair_grids = torch.stack(
            [pair_tensor([demonstrations[i] for i in subset]) for subset in subsets]
        )
        eval_grids = eval_grid.expand(len(subsets), -1, -1, -1)
        encodings = model.encoding(eval_grids, pair_grids)
        ids, logprobs = _greedy_from_states(model.decoder, encodings)
    return " ".join(VOCAB[i] for i in ids), logprobs

"""Optimization loops for the four regimes.

All training uses SGD with momentum and gradient-norm clipping, token
cross-entropy on the delta sequences, and seeded shuffling so a run is
reproducible end to end. A non-finite loss aborts immediately with
diagnostics instead of silently continuing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace

import numpy as np
import torch
from torch import nn

from .data import GridWorld, Task, delta_tokens, encode_features
from .models import MetaInductionModel, PlainInductionModel, bos_inputs
from .vocab import VOCAB_SIZE, encode_tokens

PAD_TARGET = -100

Example = tuple[GridWorld, GridWorld]


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, loss: float, lr: float):
        super().__init__(f"non-finite loss {loss!r} at step {step} (lr={lr})")
        self.step = step
        self.loss = loss
        self.lr = lr


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 0.1
    momentum: float = 0.9
    clip_norm: float = 5.0
    batch_size: int = 32
    epochs: int = 10
    dropout: float = 0.0
    seed: int = 0

    def scaled(self, **overrides) -> "TrainSettings":
        return replace(self, **overrides)


def set_determinism(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


# --- tensor assembly ---


def input_tensor(worlds: list[GridWorld]) -> torch.Tensor:
    return torch.from_numpy(np.stack([encode_features(w) for w in worlds]))


def pair_tensor(pairs: list[Example]) -> torch.Tensor:
    """(K, 32, 20, 20): input and output stacked on the channel axis."""
    stacked = [
        np.concatenate([encode_features(a), encode_features(b)], axis=0)
        for a, b in pairs
    ]
    return torch.from_numpy(np.stack(stacked))


def target_tensor(examples: list[Example]) -> torch.Tensor:
    """(B, T) target ids padded with PAD_TARGET."""
    seqs = [encode_tokens(delta_tokens(a, b)) for a, b in examples]
    width = max(len(s) for s in seqs)
    out = torch.full((len(seqs), width), PAD_TARGET, dtype=torch.long)
    for i, seq in enumerate(seqs):
        out[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
    return out


def sequence_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy per target token."""
    return nn.functional.cross_entropy(
        logits.reshape(-1, VOCAB_SIZE), targets.reshape(-1), ignore_index=PAD_TARGET
    )


def _teacher_inputs(targets: torch.Tensor) -> torch.Tensor:
    tokens_in = bos_inputs(targets)
    return tokens_in.masked_fill(tokens_in == PAD_TARGET, 0)


def _optimizer(model: nn.Module, settings: TrainSettings) -> torch.optim.SGD:
    return torch.optim.SGD(model.parameters(), lr=settings.lr, momentum=settings.momentum)


def _step(model, optimizer, loss, settings: TrainSettings, step: int) -> float:
    value = float(loss.detach())
    if not math.isfinite(value):
        raise TrainingDiverged(step, value, settings.lr)
    optimizer.zero_grad()
    loss.backward()
    nn.utils.clip_grad_norm_(model.parameters(), settings.clip_norm)
    optimizer.step()
    return value


# --- plain path ---


def plain_batch_loss(model: PlainInductionModel, examples: list[Example]) -> torch.Tensor:
    grids = input_tensor([a for a, _ in examples])
    targets = target_tensor(examples)
    logits = model(grids, _teacher_inputs(targets))
    return sequence_loss(logits, targets)


def train_plain(
    examples: list[Example],
    size: str = "small",
    settings: TrainSettings = TrainSettings(),
    model: PlainInductionModel | None = None,
    held_out: list[Example] | None = None,
) -> tuple[PlainInductionModel, list[dict]]:
    """Supervised training on one task's examples. Pass `model` to
    continue training (adaptation) instead of starting fresh. Returns
    the model and a per-epoch loss history."""
    set_determinism(settings.seed)
    if model is None:
        model = PlainInductionModel(size, dropout=settings.dropout)
    rng = random.Random(settings.seed)
    optimizer = _optimizer(model, settings)
    history = []
    step = 0
    for epoch in range(settings.epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        model.train()
        total = 0.0
        batches = 0
        for lo in range(0, len(order), settings.batch_size):
            batch = [examples[i] for i in order[lo : lo + settings.batch_size]]
            loss = plain_batch_loss(model, batch)
            total += _step(model, optimizer, loss, settings, step)
            step += 1
            batches += 1
        entry = {"epoch": epoch, "train_loss": total / max(batches, 1)}
        if held_out:
            entry["held_out_loss"] = evaluate_plain_loss(model, held_out)
        history.append(entry)
    return model, history


def evaluate_plain_loss(model: PlainInductionModel, examples: list[Example]) -> float:
    model.eval()
    with torch.no_grad():
        return float(plain_batch_loss(model, examples))


def plain_log_likelihood(model: PlainInductionModel, examples: list[Example]) -> float:
    """Summed token log-likelihood of the examples under the model, the
    portfolio-selection score."""
    model.eval()
    with torch.no_grad():
        grids = input_tensor([a for a, _ in examples])
        targets = target_tensor(examples)
        logits = model(grids, _teacher_inputs(targets))
        logprobs = torch.log_softmax(logits, dim=-1)
        mask = targets != PAD_TARGET
        safe = targets.masked_fill(~mask, 0)
        picked = logprobs.gather(2, safe.unsqueeze(2)).squeeze(2)
        return float((picked * mask).sum())


# --- meta path ---


@dataclass(frozen=True)
class Episode:
    demos: tuple[Example, ...]
    eval_input: GridWorld
    eval_output: GridWorld


def episode_from_task(task: Task, k: int, rng: random.Random) -> Episode:
    """Random holdout: one example becomes the eval pair, k of the rest
    become demonstrations."""
    if len(task.examples) < k + 1:
        raise ValueError(f"task {task.task_id} has {len(task.examples)} examples, need {k + 1}")
    picks = rng.sample(range(len(task.examples)), k + 1)
    eval_input, eval_output = task.examples[picks[0]]
    demos = tuple(task.examples[i] for i in picks[1:])
    return Episode(demos, eval_input, eval_output)


def episode_from_examples(examples: list[Example], k: int, rng: random.Random) -> Episode:
    picks = rng.sample(range(len(examples)), k + 1)
    eval_input, eval_output = examples[picks[0]]
    return Episode(tuple(examples[i] for i in picks[1:]), eval_input, eval_output)


def meta_batch_loss(model: MetaInductionModel, episodes: list[Episode]) -> torch.Tensor:
    eval_grids = input_tensor([e.eval_input for e in episodes])
    pair_grids = torch.stack([pair_tensor(list(e.demos)) for e in episodes])
    targets = target_tensor([(e.eval_input, e.eval_output) for e in episodes])
    logits = model(eval_grids, pair_grids, _teacher_inputs(targets))
    return sequence_loss(logits, targets)


def train_meta(
    tasks: list[Task],
    k: int = 5,
    size: str = "small",
    settings: TrainSettings = TrainSettings(),
    model: MetaInductionModel | None = None,
    held_out_tasks: list[Task] | None = None,
) -> tuple[MetaInductionModel, list[dict]]:
    """Episodic training across tasks with the random-holdout scheme."""
    set_determinism(settings.seed)
    if model is None:
        model = MetaInductionModel(size, dropout=settings.dropout)
    rng = random.Random(settings.seed)
    optimizer = _optimizer(model, settings)
    history = []
    step = 0
    for epoch in range(settings.epochs):
        order = list(range(len(tasks)))
        rng.shuffle(order)
        model.train()
        total = 0.0
        batches = 0
        for lo in range(0, len(order), settings.batch_size):
            episodes = [
                episode_from_task(tasks[i], k, rng)
                for i in order[lo : lo + settings.batch_size]
            ]
            loss = meta_batch_loss(model, episodes)
            total += _step(model, optimizer, loss, settings, step)
            step += 1
            batches += 1
        entry = {"epoch": epoch, "train_loss": total / max(batches, 1)}
        if held_out_tasks:
            entry["held_out_loss"] = evaluate_meta_loss(model, held_out_tasks, k, seed=epoch)
        history.append(entry)
    return model, history


def evaluate_meta_loss(
    model: MetaInductionModel, tasks: list[Task], k: int, seed: int = 0
) -> float:
    rng = random.Random(seed)
    episodes = [episode_from_task(task, k, rng) for task in tasks]
    model.eval()
    with torch.no_grad():
        return float(meta_batch_loss(model, episodes))


def adapt(
    base_model: PlainInductionModel | MetaInductionModel,
    task_examples: list[Example],
    mixture_source: list[Task] | None = None,
    mixture_ratio: float = 0.10,
    k: int = 5,
    settings: TrainSettings = TrainSettings(),
    steps: int = 100,
    held_out: list[Example] | None = None,
) -> tuple[PlainInductionModel | MetaInductionModel, list[dict]]:
    """Continue gradient training on a specific task.

    Plain models fine-tune on the raw examples. Meta models re-sample
    (k+1)-example episodes from the task, and with a mixture source
    each minibatch draws ~mixture_ratio of its episodes from the new
    task and the rest from random background tasks.
    """
    if not 0.0 < mixture_ratio <= 1.0:
        raise ValueError("mixture_ratio must be in (0, 1]")
    if isinstance(base_model, PlainInductionModel):
        batches_per_epoch = -(-len(task_examples) // settings.batch_size)
        epochs = max(1, round(steps / batches_per_epoch))
        return train_plain(
            task_examples, base_model.size,
            settings.scaled(epochs=epochs), model=base_model, held_out=held_out,
        )

    set_determinism(settings.seed)
    rng = random.Random(settings.seed)
    model = base_model
    optimizer = _optimizer(model, settings)
    history = []
    new_per_batch = max(1, round(settings.batch_size * mixture_ratio))
    for step in range(steps):
        model.train()
        episodes = [
            episode_from_examples(task_examples, k, rng) for _ in range(new_per_batch)
        ]
        if mixture_source:
            for _ in range(settings.batch_size - new_per_batch):
                episodes.append(episode_from_task(rng.choice(mixture_source), k, rng))
        loss = meta_batch_loss(model, episodes)
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDiverged(step, value, settings.lr)
        optimizer.zero_grad()
        loss.backward()
        nn.utils.clip_grad_norm_(model.parameters(), settings.clip_norm)
        optimizer.step()
        entry = {"epoch": step, "train_loss": value}
        if held_out is not None and (step % 10 == 9 or step == steps - 1):
            entry["held_out_loss"] = evaluate_adapt_held_out(model, task_examples, held_out, k)
        history.append(entry)
    return model, history


def evaluate_adapt_held_out(
    model: MetaInductionModel,
    demos: list[Example],
    held_out: list[Example],
    k: int,
) -> float:
    """Held-out loss of a meta model on unseen examples of the task,
    conditioning on the first k demonstration examples."""
    episodes = [
        Episode(tuple(demos[:k]), eval_input, eval_output)
        for eval_input, eval_output in held_out
    ]
    model.eval()
    with torch.no_grad():
        return float(meta_batch_loss(model, episodes))

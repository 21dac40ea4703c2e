"""Induction models: a grid encoder + LSTM token decoder, and the
k-shot variant that additionally conditions on demonstration pairs.

Input encoder: 3 conv layers (3x3) + FC + relu. Task encoder: per
example, the input and output grids are concatenated on the channel
axis (32 channels), passed through 1 + 6 conv layers and an FC + relu,
then max-pooled elementwise across the k examples, which makes the
task embedding invariant to demonstration order. The pooled embedding
is concatenated with the eval-input encoding to seed the decoder
state. Sizes: large = 64-dim feature maps / 1024-dim FC+LSTM,
medium = 32/256, small = 16/64.
"""

from __future__ import annotations

import torch
from torch import nn

from .data import CHANNELS, GRID
from .vocab import BOS_ID, VOCAB_SIZE

SIZES = {"large": (64, 1024), "medium": (32, 256), "small": (16, 64)}

# Feature grids are sparse and binary, so the first conv layer's
# activations come out far smaller than kaiming assumes; with plain
# SGD the decoder then settles into an input-ignoring local optimum
# before the encoder wakes up. Boosting only the first layer restores
# the scale; boosting deeper layers compounds through the 7-layer
# task-encoder stack and saturates everything instead.
_FIRST_LAYER_GAIN = 4.0


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.Linear)):
        nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def _conv_stack(in_channels: int, feature_dim: int, layers: int) -> nn.Sequential:
    blocks: list[nn.Module] = []
    prev = in_channels
    for _ in range(layers):
        blocks.append(nn.Conv2d(prev, feature_dim, kernel_size=3, padding=1))
        blocks.append(nn.ReLU())
        prev = feature_dim
    stack = nn.Sequential(*blocks)
    stack.apply(_init_weights)
    with torch.no_grad():
        stack[0].weight.mul_(_FIRST_LAYER_GAIN)
    return stack


class _GridEncoder(nn.Module):
    """conv x layers -> flatten -> FC -> relu"""

    def __init__(self, in_channels: int, feature_dim: int, hidden_dim: int, layers: int):
        super().__init__()
        self.convs = _conv_stack(in_channels, feature_dim, layers)
        self.fc = nn.Linear(feature_dim * GRID * GRID, hidden_dim)
        _init_weights(self.fc)

    def forward(self, grids: torch.Tensor) -> torch.Tensor:
        feats = self.convs(grids)
        return torch.relu(self.fc(feats.flatten(1)))


class _TokenDecoder(nn.Module):
    """1-layer LSTM over delta tokens; output layer has one logit per
    vocabulary entry (181). The conditioning context both seeds the
    hidden state (through a projection when dims differ) and rides
    along as an input at every step; initial-state-only conditioning
    trains far too weakly through the LSTM gates."""

    def __init__(self, hidden_dim: int, context_dim: int, dropout: float):
        super().__init__()
        self.embed = nn.Embedding(VOCAB_SIZE + 1, hidden_dim)  # +1 for BOS
        self.lstm = nn.LSTM(hidden_dim + context_dim, hidden_dim, num_layers=1, batch_first=True)
        self.drop = nn.Dropout(dropout)
        self.h0_proj = None if context_dim == hidden_dim else nn.Linear(context_dim, hidden_dim)
        self.out = nn.Linear(hidden_dim, VOCAB_SIZE)
        # the output bias can fit token marginals without any weight
        # scaling, while input-dependent signal backpropagates through
        # out.weight; tiny default weights make the decoder learn the
        # marginals first and park there, so start the head larger
        nn.init.kaiming_normal_(self.out.weight, nonlinearity="relu")
        with torch.no_grad():
            self.out.weight.mul_(2.0)
        nn.init.zeros_(self.out.bias)

    def initial_state(self, context: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h0 = context if self.h0_proj is None else self.h0_proj(context)
        h0 = h0.unsqueeze(0).contiguous()
        return h0, torch.zeros_like(h0)

    def forward(self, context: torch.Tensor, tokens_in: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits, shape (B, T, vocab)."""
        state = self.initial_state(context)
        expanded = context.unsqueeze(1).expand(-1, tokens_in.shape[1], -1)
        lstm_in = torch.cat([self.drop(self.embed(tokens_in)), expanded], dim=2)
        hidden, _ = self.lstm(lstm_in, state)
        return self.out(hidden)

    def step(
        self,
        tokens: torch.Tensor,
        state: tuple[torch.Tensor, torch.Tensor],
        context: torch.Tensor,
    ) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]:
        lstm_in = torch.cat([self.embed(tokens), context], dim=1).unsqueeze(1)
        hidden, state = self.lstm(lstm_in, state)
        return self.out(hidden.squeeze(1)), state


class PlainInductionModel(nn.Module):
    """One model per task: eval input grid -> delta token sequence."""

    def __init__(self, size: str = "small", dropout: float = 0.0):
        super().__init__()
        if size not in SIZES:
            raise ValueError(f"unknown size {size!r}")
        feature_dim, hidden_dim = SIZES[size]
        self.size = size
        self.hidden_dim = hidden_dim
        self.encoder = _GridEncoder(CHANNELS, feature_dim, hidden_dim, layers=3)
        self.decoder = _TokenDecoder(hidden_dim, hidden_dim, dropout)

    def encoding(self, grids: torch.Tensor) -> torch.Tensor:
        return self.encoder(grids)

    def forward(self, grids: torch.Tensor, tokens_in: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encoding(grids), tokens_in)


class MetaInductionModel(nn.Module):
    """One model per task family, conditioned on k demonstration pairs."""

    def __init__(self, size: str = "small", dropout: float = 0.0):
        super().__init__()
        if size not in SIZES:
            raise ValueError(f"unknown size {size!r}")
        feature_dim, hidden_dim = SIZES[size]
        self.size = size
        self.hidden_dim = hidden_dim
        self.eval_encoder = _GridEncoder(CHANNELS, feature_dim, hidden_dim, layers=3)
        self.pair_conv = _conv_stack(2 * CHANNELS, feature_dim, layers=1 + 6)
        self.pair_fc = nn.Linear(feature_dim * GRID * GRID, hidden_dim)
        # decoder context is the raw [eval encoding | task embedding]
        # concatenation; keeping the eval half an identity path lets the
        # decoder read the eval input as easily as the plain model does
        self.decoder = _TokenDecoder(hidden_dim, 2 * hidden_dim, dropout)
        _init_weights(self.pair_fc)

    def encode_task(self, pair_grids: torch.Tensor) -> torch.Tensor:
        """(B, K, 32, 20, 20) -> (B, hidden); max-pool over the K
        per-example vectors, so demonstration order cannot matter."""
        batch, k = pair_grids.shape[:2]
        feats = self.pair_conv(pair_grids.flatten(0, 1))
        vecs = torch.relu(self.pair_fc(feats.flatten(1)))
        return vecs.view(batch, k, -1).amax(dim=1)

    def encoding(self, eval_grids: torch.Tensor, pair_grids: torch.Tensor) -> torch.Tensor:
        eval_enc = self.eval_encoder(eval_grids)
        task_emb = self.encode_task(pair_grids)
        return torch.cat([eval_enc, task_emb], dim=1)

    def forward(
        self, eval_grids: torch.Tensor, pair_grids: torch.Tensor, tokens_in: torch.Tensor
    ) -> torch.Tensor:
        return self.decoder(self.encoding(eval_grids, pair_grids), tokens_in)


def bos_inputs(targets: torch.Tensor) -> torch.Tensor:
    """Shift targets right and prepend BOS for teacher forcing."""
    bos = targets.new_full((targets.shape[0], 1), BOS_ID)
    return torch.cat([bos, targets[:, :-1]], dim=1)

"""Karel grid-world benchmark toolchain."""

from .core import (
    Action,
    ActionKind,
    Cond,
    CondKind,
    Condition,
    Crash,
    CrashCause,
    DepthError,
    Direction,
    ExecutionOutcome,
    If,
    IfElse,
    InvalidWorld,
    KarelError,
    Not,
    Program,
    Repeat,
    SizeError,
    Statement,
    Success,
    Timeout,
    While,
    World,
    nesting_depth,
    statement_count,
    world_equal,
)
from .delta import DeltaScript, detokenize, diff, tokenize
from .generate import GenConfig, generate_dataset, generate_task, sample_program, sample_world
from .harness import exact_match, plan_subsets, score_dataset, select_portfolio_model
from .interpreter import eval_condition, execute, trace
from .parsing import ParseError, parse, pretty_print

__version__ = "0.1.0"

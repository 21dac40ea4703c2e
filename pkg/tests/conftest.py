import functools
import random

from karelbench.core import World
from karelbench.generate import GenConfig, generate_task, sample_program, sample_world


def make_config(seed: int = 0, **overrides) -> GenConfig:
    return GenConfig(seed=seed, **overrides)


def sample_worlds(seed: int, count: int, **overrides) -> list[World]:
    config = make_config(seed, **overrides)
    rng = random.Random(seed)
    return [sample_world(rng, config) for _ in range(count)]


def sample_programs(seed: int, count: int, **overrides):
    config = make_config(seed, **overrides)
    rng = random.Random(seed)
    return [sample_program(rng, config) for _ in range(count)]


def sample_pairs(seed: int, count: int, **overrides):
    """Random (program, world) pairs for interpreter cross-checks."""
    config = make_config(seed, **overrides)
    rng = random.Random(seed)
    return [
        (sample_program(rng, config), sample_world(rng, config))
        for _ in range(count)
    ]


@functools.lru_cache(maxsize=4)
def accepted_triples(seed: int, count: int) -> tuple:
    """Accepted (program_source, input, output) examples from the
    generation pipeline; grouped into 20-example tasks to amortize the
    program search."""
    config = make_config(seed, examples_per_task=20)
    rng = random.Random(seed)
    triples = []
    task = 0
    while len(triples) < count:
        record = generate_task(rng, config, f"t{task}")
        task += 1
        triples.extend(
            (record.program_source, inp, out) for inp, out in record.examples
        )
    return tuple(triples[:count])


def accepted_pairs(seed: int, count: int) -> tuple:
    return tuple((inp, out) for _, inp, out in accepted_triples(seed, count))

"""Reproducible random number generation."""
import numpy as np

from teleport_noise.config.settings import settings


def get_rng(seed: int | None = None) -> np.random.Generator:
    """Return a numpy Generator seeded with ``seed`` (configured default when None)."""
    return np.random.default_rng(settings.default_seed if seed is None else seed)


def block_generators(seed: int | None, n_blocks: int) -> list[np.random.Generator]:
    """One independent Generator per work block.

    Child streams come from ``SeedSequence.spawn`` so block ``b`` draws the same numbers
    whichever worker lane executes it.
    """
    root = np.random.SeedSequence(settings.default_seed if seed is None else seed)
    return [np.random.default_rng(child) for child in root.spawn(n_blocks)]


def block_sizes(samples: int, block_size: int | None = None) -> list[int]:
    """Split ``samples`` into fixed-size blocks, last block possibly shorter."""
    size = block_size or settings.mc_block_size
    full, rest = divmod(samples, size)
    return [size] * full + ([rest] if rest else [])

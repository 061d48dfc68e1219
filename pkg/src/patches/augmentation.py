"""
Training augmentation of patches: random horizontal and vertical flips and a random permutation
of the color channels. The depth channel is flipped with the colors but never permuted.
"""
from dataclasses import replace
from itertools import permutations

import numpy as np

from src.patches.sampling import Patch

# identity first, so index 0 leaves the colors untouched
COLOR_PERMUTATIONS = [tuple(p) for p in permutations(range(3))]


def augment_with(patch: Patch, flip_h: bool, flip_v: bool,
                 permutation: tuple[int, int, int] = (0, 1, 2)) -> Patch:
    """
    Applies a fixed augmentation. Output channel c takes input color channel permutation[c].
    :param patch: input patch
    :param flip_h: mirror left/right
    :param flip_v: mirror top/bottom
    :param permutation: color channel order
    :return: augmented patch, center point and source pixel are kept
    """
    data = patch.data[list(permutation) + [3]]
    if flip_h:
        data = data[:, :, ::-1]
    if flip_v:
        data = data[:, ::-1, :]
    return replace(patch, data=np.ascontiguousarray(data))


def augment(patch: Patch, seed: int) -> Patch:
    """
    Draws flips and a color permutation from a generator seeded with seed.
    """
    rng = np.random.default_rng(seed)
    flip_h, flip_v = rng.random(2) < 0.5
    permutation = COLOR_PERMUTATIONS[rng.integers(len(COLOR_PERMUTATIONS))]
    return augment_with(patch, bool(flip_h), bool(flip_v), permutation)


def augment_batch(data: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Augments every sample of a (N, 4, 32, 32) batch with its own draw.
    :param data: patch batch
    :param rng: random generator, advanced by the call
    :return: augmented copy of the batch
    """
    count = len(data)
    flips = rng.random((count, 2)) < 0.5
    choice = rng.integers(len(COLOR_PERMUTATIONS), size=count)

    channels = np.array([list(COLOR_PERMUTATIONS[i]) + [3] for i in choice])
    out = np.take_along_axis(data, channels[:, :, None, None], axis=1)
    out = np.where(flips[:, 0, None, None, None], out[:, :, :, ::-1], out)
    out = np.where(flips[:, 1, None, None, None], out[:, :, ::-1, :], out)
    return out.astype(data.dtype)

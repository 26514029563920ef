import zlib
from typing import Tuple

import numpy as np

from .errors import InvalidParameterError

RNG_NAME = f"numpy.Philox/SeedSequence (numpy {np.__version__})"


def _label_key(labels: Tuple[str, ...]) -> Tuple[int, ...]:
    return tuple(zlib.crc32(str(label).encode('utf-8')) for label in labels)


def derive_rng(seed: int, *labels: str) -> np.random.Generator:
    """Generator for one purpose, derived from the root seed and a label path.

    Streams for different labels are independent, and the same (seed, labels)
    always yields the same stream, regardless of call order or thread.
    """
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(labels))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *labels: str) -> int:
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(labels))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])

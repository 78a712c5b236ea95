import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar, Union

import numpy as np

from sensipy.exceptions import ValidationError

logger = logging.getLogger(__name__)

T = TypeVar("T")

THREADS_ENV = "SENSIPY_THREADS"


def stream(seed: int, index: int, tag: int = 0) -> np.random.Generator:
    """Returns the random stream of sample `index`.
    Streams are keyed Philox generators, so the draws of a sample
    depend only on (seed, tag, index) and never on scheduling.

    Args:
        seed: study seed
        index: sample index
        tag: separates independent families of draws, e.g. coefficient
            and source innovations of the same sample

    Examples:
    >>> a = stream(0, 5).standard_normal(3)
    >>> b = stream(0, 5).standard_normal(3)
    >>> bool(np.array_equal(a, b))
    True
    >>> bool(np.array_equal(a, stream(0, 6).standard_normal(3)))
    False
    """
    key = np.random.SeedSequence([int(seed), int(tag), int(index)]).generate_state(
        2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal_block(
    seed: int,
    n: int,
    size: int,
    tag: int = 0,
    start: int = 0) -> np.ndarray:
    """Draws innovations of samples start, ..., start+n-1 with a size of (n, size)."""
    return np.stack([stream(seed, start + i, tag).standard_normal(size)
                     for i in range(n)])


def innovations(
    rng: Union[int, np.random.Generator],
    n: int,
    size: int,
    tag: int = 0,
    start: int = 0) -> np.ndarray:
    """Standard-normal innovations with a size of (n, size).
    An integer `rng` is a seed of per-sample streams; a Generator is
    consumed sequentially.

    Examples:
    >>> innovations(3, 4, 2).shape
    (4, 2)
    >>> bool(np.array_equal(innovations(3, 4, 2)[2], innovations(3, 1, 2, start=2)[0]))
    True
    """
    if n < 1:
        raise ValidationError(f"sample count must be at least 1, got {n}")
    if isinstance(rng, np.random.Generator):
        return rng.standard_normal((n, size))
    return standard_normal_block(int(rng), n, size, tag=tag, start=start)


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread count from the argument, else the environment, else 1."""
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(threads))


def parallel_map(
    function: Callable[[T], object],
    items: Iterable[T],
    threads: Optional[int] = None) -> List[object]:
    """Applies `function` to every item and returns results in item order.
    >>> parallel_map(lambda x: x * x, range(4), threads=2)
    [0, 1, 4, 9]
    """
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [function(item) for item in items]
    logger.debug("mapping %d items over %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, items))


if __name__ == "__main__":
    import doctest
    doctest.testmod()

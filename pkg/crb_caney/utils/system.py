import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

__all__ = [
    "DEFAULT_CHUNK_SIZE", "chunk_generator", "chunk_sizes", "map_chunks",
    "reduce_chunks"
]

# trials per random stream, fixed so results do not depend on workers
DEFAULT_CHUNK_SIZE = 1000


def chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    """
    Counter-based random stream for one chunk of trials.
    Args:
        seed (int): integer seed of the whole run.
        chunk (int): chunk index.
    Returns:
        np.random.Generator backed by Philox.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))
    return np.random.Generator(np.random.Philox(sequence))


def chunk_sizes(
            trials: int,
            chunk_size: int = DEFAULT_CHUNK_SIZE
        ) -> List[int]:
    """
    Split a trial count into fixed-size chunks, last one possibly shorter.
    """
    assert trials > 0, f'trials must be positive, got {trials}'
    full, remainder = divmod(int(trials), int(chunk_size))
    sizes = [int(chunk_size)] * full
    if remainder:
        sizes.append(remainder)
    return sizes


def map_chunks(
            func: Callable[[np.random.Generator, int], Any],
            seed: int,
            trials: int,
            workers: int = 1,
            chunk_size: int = DEFAULT_CHUNK_SIZE,
            progress: bool = False,
            desc: str = 'trials'
        ) -> List[Any]:
    """
    Evaluate func(rng, size) for every chunk of trials.
    Args:
        func (Callable): chunk evaluator taking a generator and a size.
        seed (int): integer seed.
        trials (int): total number of trials.
        workers (int): thread pool size, 1 runs inline.
        chunk_size (int): trials per chunk.
        progress (bool): show a tqdm progress bar.
        desc (str): progress bar label.
    Returns:
        List of chunk results in chunk order.
    """
    sizes = chunk_sizes(trials, chunk_size)
    tasks: Sequence[Tuple[int, int]] = list(enumerate(sizes))
    logging.info(
        f'Running {trials} {desc} in {len(sizes)} chunks, seed {seed}, '
        f'{workers} workers')

    def run(task: Tuple[int, int]) -> Any:
        chunk, size = task
        return func(chunk_generator(seed, chunk), size)

    if workers is None or workers <= 1:
        return [
            run(task) for task in tqdm(tasks, desc=desc, disable=not progress)
        ]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        # map preserves submission order
        return list(tqdm(
            executor.map(run, tasks), total=len(tasks), desc=desc,
            disable=not progress))


def reduce_chunks(partials: Sequence[np.ndarray]) -> np.ndarray:
    """
    Sum chunk partial results in chunk order (fixed summation tree).
    """
    return np.sum(np.stack([np.asarray(p) for p in partials]), axis=0)

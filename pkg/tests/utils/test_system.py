import pytest
import numpy as np
from crb_caney.utils import system

__all__ = [
    "test_chunk_generator", "test_chunk_sizes", "test_map_chunks_workers",
    "test_reduce_chunks"
]


@pytest.mark.parametrize(
    "seed", [10, 1024]
)
def test_chunk_generator(seed):
    first = system.chunk_generator(seed, 0).standard_normal(5)
    again = system.chunk_generator(seed, 0).standard_normal(5)
    other = system.chunk_generator(seed, 1).standard_normal(5)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)


@pytest.mark.parametrize(
    "trials, chunk_size, expected",
    [(10, 4, [4, 4, 2]), (8, 4, [4, 4]), (3, 1000, [3])]
)
def test_chunk_sizes(trials, chunk_size, expected):
    assert system.chunk_sizes(trials, chunk_size) == expected


@pytest.mark.parametrize(
    "workers", [2, 4, 8]
)
def test_map_chunks_workers(workers):
    def func(rng, size):
        return rng.standard_normal(size).sum()

    inline = system.map_chunks(func, 7, 2500, workers=1, chunk_size=300)
    threaded = system.map_chunks(
        func, 7, 2500, workers=workers, chunk_size=300)
    assert len(inline) == 9
    assert inline == threaded


def test_reduce_chunks():
    partials = [np.eye(2), 2.0 * np.eye(2), np.ones((2, 2))]
    assert np.array_equal(
        system.reduce_chunks(partials), np.array([[4.0, 1.0], [1.0, 4.0]]))

"""numba setup: set TOPTW_NO_JIT=1 to run the kernels as plain Python."""

import os

import numpy as np

if os.environ.get("TOPTW_NO_JIT"):

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

else:
    from numba import njit  # noqa: F401


@njit(cache=True)
def _seed(seed):
    np.random.seed(seed)


def seed_kernels(seed: int) -> None:
    """Seed the generator shared by all kernels (single stream per process)."""
    _seed(int(seed) & 0xFFFFFFFF)

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import functools
import os

import numpy as np

from bhvmc.base import config


def default_if_none(val, default):
    if val is None:
        return default
    return val


def config_batch(configs):
    """
    Returns (batch, single) where batch is a C-contiguous int64 array of
    shape (n_configs, n_sites) and single tells whether a lone
    configuration was passed.
    """
    arr = np.asarray(configs)
    single = arr.ndim == 1
    batch = np.ascontiguousarray(np.atleast_2d(arr), dtype=np.int64)
    return batch, single


def single_or_batch(func):
    """
    Lets a method written for a batch of configurations also take a single
    occupation vector, in which case the first (only) row of the result is
    returned.
    """
    @functools.wraps(func)
    def wrapper_single_or_batch(self, configs, *args, **kwargs):
        batch, single = config_batch(configs)
        result = func(self, batch, *args, **kwargs)
        if single:
            return result[0]
        return result
    return wrapper_single_or_batch


def chunks(total, size):
    """Yields slices covering range(total) in pieces of at most size."""
    size = max(int(size), 1)
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))


def resolve_workers(workers=None):
    if workers is None:
        workers = int(os.environ.get(config.workers_env, "0") or 0)
        if workers <= 0:
            workers = config.workers
    return max(int(workers), 1)


def split_evenly(total, parts):
    """Splits range(total) in `parts` contiguous slices of near-equal size."""
    parts = max(min(parts, total), 1)
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

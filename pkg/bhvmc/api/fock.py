# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Fock
Occupation-number configurations at fixed particle number N, single-boson
hops with their matrix elements, and the enumerated fixed-N basis used by
exact diagonalization. Occupations are not truncated locally.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from bhvmc.base import config
from bhvmc.base.errors import ConfigurationError, DimensionError
from bhvmc.base.helpers import config_batch, default_if_none

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockConfiguration:
    occupations: tuple
    total: int = field(init=False)

    def __post_init__(self):
        occ = tuple(int(x) for x in np.ravel(self.occupations))
        if any(x < 0 for x in occ):
            raise ConfigurationError("negative occupation in {}".format(occ))
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "total", sum(occ))

    @classmethod
    def uniform(cls, n_sites, density=1):
        return cls((int(density),) * n_sites)

    @property
    def n_sites(self):
        return len(self.occupations)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.occupations, dtype=dtype or np.int64)

    def __getitem__(self, i):
        return self.occupations[i]

    def __len__(self):
        return len(self.occupations)

    def hop(self, src, dst):
        return hop_move(self, src, dst)


def hop_move(n, src, dst):
    """
    Description: Applies a_dst^dagger a_src to the configuration n.
    Return Values:
    -On Success:    (n', amplitude) with n' = n - e_src + e_dst and
                    amplitude = sqrt(n[src] * (n[dst] + 1))
    """
    if not isinstance(n, FockConfiguration):
        n = FockConfiguration(n)
    occ = list(n.occupations)
    if not (0 <= src < len(occ) and 0 <= dst < len(occ)):
        raise ConfigurationError("hop {} -> {} outside {} sites"
                                 "".format(src, dst, len(occ)))
    if src == dst:
        raise ConfigurationError("hop needs two distinct sites")
    if occ[src] < 1:
        raise ConfigurationError("no boson to move from empty site {}"
                                 "".format(src))
    amplitude = math.sqrt(occ[src] * (occ[dst] + 1))
    occ[src] -= 1
    occ[dst] += 1
    return FockConfiguration(tuple(occ)), amplitude


def hop_batch(configs, src, dst):
    """
    Vectorized hops: row b moves one boson from src[b] to dst[b].
    Returns (new_configs, amplitudes) with amplitude 0 where src is empty
    (those rows are returned unchanged).
    """
    batch, _ = config_batch(configs)
    rows = np.arange(len(batch))
    src = np.broadcast_to(np.asarray(src, dtype=np.int64), rows.shape)
    dst = np.broadcast_to(np.asarray(dst, dtype=np.int64), rows.shape)
    n_src = batch[rows, src]
    n_dst = batch[rows, dst]
    allowed = n_src > 0
    amplitude = np.where(allowed, np.sqrt(n_src * (n_dst + 1.0)), 0.0)
    out = batch.copy()
    out[rows[allowed], src[allowed]] -= 1
    out[rows[allowed], dst[allowed]] += 1
    return out, amplitude


def basis_dimension(n_sites, N):
    return math.comb(N + n_sites - 1, N)


class FockBasis(object):
    """
    The fixed-N basis in descending lexicographic order (first site most
    significant, largest occupation first), with an O(n_sites) rank map.
    """

    def __init__(self, n_sites, N, max_dim=None):
        max_dim = default_if_none(max_dim, config.basis_max_dim)
        if n_sites < 1 or N < 0:
            raise ConfigurationError("need n_sites >= 1 and N >= 0")
        self.n_sites = int(n_sites)
        self.N = int(N)
        self.dim = basis_dimension(self.n_sites, self.N)
        if self.dim > max_dim:
            raise DimensionError("fixed-N basis of dimension {} exceeds the "
                                 "guard {}".format(self.dim, max_dim))
        self.configs = self._enumerate()
        self.configs.setflags(write=False)
        # _ways[m, s] = C(m + s, s): placements of m bosons on s + 1 sites
        self._ways = np.array([[math.comb(m + s, s)
                                for s in range(self.n_sites + 1)]
                               for m in range(self.N + 1)], dtype=np.int64)
        logger.debug("enumerated fixed-N basis: %d sites, N=%d, dim=%d",
                     self.n_sites, self.N, self.dim)

    def _enumerate(self):
        n, N = self.n_sites, self.N
        if n == 1:
            return np.array([[N]], dtype=np.int64)
        bars = np.fromiter(
            itertools.chain.from_iterable(
                itertools.combinations(range(N + n - 1), n - 1)),
            dtype=np.int64, count=self.dim * (n - 1)).reshape(self.dim, n - 1)
        edges = np.concatenate([np.full((self.dim, 1), -1), bars,
                                np.full((self.dim, 1), N + n - 1)], axis=1)
        occ = np.diff(edges, axis=1) - 1
        return np.ascontiguousarray(occ[::-1])

    def index(self, configs):
        """
        Rank of each configuration in the basis, -1 for rows that are not
        in the basis (wrong total, negative entries, wrong length).
        """
        batch, single = config_batch(configs)
        if batch.shape[1] != self.n_sites:
            raise ConfigurationError("configurations have {} sites, basis "
                                     "has {}".format(batch.shape[1],
                                                     self.n_sites))
        valid = (batch.sum(axis=1) == self.N) & np.all(batch >= 0, axis=1)
        rank = np.zeros(len(batch), dtype=np.int64)
        remaining = np.full(len(batch), self.N, dtype=np.int64)
        for k in range(self.n_sites - 1):
            nk = np.where(valid, batch[:, k], 0)
            m = remaining - nk - 1
            s = self.n_sites - k - 1
            take = valid & (m >= 0)
            rank[take] += self._ways[m[take], s]
            remaining = remaining - nk
        rank[~valid] = -1
        if single:
            return int(rank[0])
        return rank

    def __len__(self):
        return self.dim

    def __getitem__(self, k):
        return FockConfiguration(self.configs[k])

    def __iter__(self):
        return (FockConfiguration(row) for row in self.configs)

    def __repr__(self):
        return "FockBasis(n_sites={}, N={}, dim={})".format(
            self.n_sites, self.N, self.dim)


def enumerate_fixed_n(n_sites, N, max_dim=None):
    """
    Description: All configurations of N bosons on n_sites sites, in
    descending lexicographic order.
    Return Values:
    -On Success:    a FockBasis (iterable, indexable, with .index(config))
    """
    return FockBasis(n_sites, N, max_dim)


def random_configuration(n_sites, N, rng):
    """N bosons dropped uniformly at random on n_sites sites."""
    return np.bincount(rng.integers(0, n_sites, size=N),
                       minlength=n_sites).astype(np.int64)

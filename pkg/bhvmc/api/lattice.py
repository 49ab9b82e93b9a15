# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Lattice
Periodic hypercubic lattices (the L x L square lattice, and rings used as
small benchmarks): site indexing, nearest neighbors, translations and the
minimum-image L1 distance used by the Jastrow weights and the convolutions.

Sites are numbered row-major over their integer coordinates, the last
coordinate running fastest. For L = 2 every site reaches the same
neighbor through both the forward and the backward wrap, so each bond
appears twice in the neighbor table and in the bond list. The Hamiltonian
then counts it twice, literally following the periodic sum; an open
interpretation of the 2 x 2 plaquette would count it once.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from bhvmc.base.errors import LatticeError, SiteIndexError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """
    Immutable lattice tables. Built by build_lattice / build_chain, never
    by hand.
    """
    L: int
    ndim: int
    periodic: bool
    coords: np.ndarray
    neighbor_table: np.ndarray
    bonds: np.ndarray
    distance_table: np.ndarray
    distance_classes: np.ndarray
    distance_index: np.ndarray
    _translations: dict = field(default_factory=dict, repr=False)

    @property
    def n_sites(self):
        return self.coords.shape[0]

    @property
    def shape(self):
        return (self.L,) * self.ndim

    @property
    def z(self):
        """Coordination number."""
        return 2 * self.ndim

    @property
    def n_distance_classes(self):
        return len(self.distance_classes)

    def check_site(self, i):
        if not 0 <= int(i) < self.n_sites:
            raise SiteIndexError("site {} outside a lattice of {} sites"
                                 "".format(i, self.n_sites))
        return int(i)

    def site(self, coords):
        """Site index of integer coordinates, reduced mod L when periodic."""
        c = np.asarray(coords, dtype=np.int64)
        if self.periodic:
            c = np.mod(c, self.L)
        elif np.any((c < 0) | (c >= self.L)):
            raise SiteIndexError("coordinates {} outside the open lattice"
                                 "".format(tuple(c)))
        return int(np.ravel_multi_index(tuple(c), self.shape))

    def distance(self, i, j):
        return min_image_l1_distance(self, i, j)

    def translate(self, i, v):
        return translate_site(self, i, v)

    def translation_permutation(self, v):
        """
        Array p with p[i] = T_v(i) for every site. Cached per displacement.
        """
        if not self.periodic:
            raise LatticeError("translations need a periodic lattice")
        v = tuple(int(x) % self.L for x in np.atleast_1d(v))
        if len(v) != self.ndim:
            raise LatticeError("displacement {} has the wrong dimension"
                               "".format(v))
        perm = self._translations.get(v)
        if perm is None:
            shifted = np.mod(self.coords + np.asarray(v), self.L)
            perm = np.ravel_multi_index(tuple(shifted.T), self.shape)
            perm.setflags(write=False)
            self._translations[v] = perm
        return perm

    def all_translations(self):
        """Displacement vectors of every lattice translation."""
        return [tuple(int(x) for x in c) for c in self.coords]

    def kernel_offsets(self, radius):
        """
        Offsets of the Chebyshev ball v_inf <= radius in a fixed order
        (lexicographic, last coordinate fastest).
        """
        r = range(-radius, radius + 1)
        return [tuple(v) for v in itertools.product(r, repeat=self.ndim)]

    def shift_table(self, offsets):
        """shift[k, i] = T_{offsets[k]}(i)."""
        return np.stack([self.translation_permutation(v) for v in offsets])

    def ring_offsets(self, d):
        """
        Distinct displacements whose minimum-image L1 length is d.
        """
        if not self.periodic:
            raise LatticeError("rings need a periodic lattice")
        origin = 0
        sites = np.nonzero(self.distance_table[origin] == d)[0]
        return [tuple(int(x) for x in self.coords[s]) for s in sites]

    def displacement_table(self):
        """
        disp[i, j] = site index of the displacement x_j - x_i (mod L), the
        label of the translation class of the pair (i, j).
        """
        if not self.periodic:
            raise LatticeError("displacements need a periodic lattice")
        diff = np.mod(self.coords[None, :, :] - self.coords[:, None, :],
                      self.L)
        return np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)),
                                    self.shape)

    def __repr__(self):
        kind = "periodic" if self.periodic else "open"
        return "LatticeGeometry({} {}D, L={})".format(kind, self.ndim,
                                                      self.L)


def _build(L, ndim, periodic):
    if int(L) != L or L < 2:
        raise LatticeError("linear size must be an integer >= 2, got {}"
                           "".format(L))
    L = int(L)
    shape = (L,) * ndim
    n_sites = L ** ndim
    coords = np.array(list(itertools.product(range(L), repeat=ndim)),
                      dtype=np.int64).reshape(n_sites, ndim)

    neighbors = np.full((n_sites, 2 * ndim), -1, dtype=np.int64)
    bonds = []
    for axis in range(ndim):
        for step, slot in ((1, 2 * axis), (-1, 2 * axis + 1)):
            moved = coords.copy()
            moved[:, axis] += step
            if periodic:
                moved[:, axis] %= L
                valid = np.ones(n_sites, dtype=bool)
            else:
                valid = (moved[:, axis] >= 0) & (moved[:, axis] < L)
            idx = np.full(n_sites, -1, dtype=np.int64)
            idx[valid] = np.ravel_multi_index(tuple(moved[valid].T), shape)
            neighbors[:, slot] = idx
            if step == 1:
                bonds.extend((int(i), int(j)) for i, j in
                             zip(np.nonzero(valid)[0], idx[valid]))

    delta = np.abs(coords[:, None, :] - coords[None, :, :])
    if periodic:
        delta = np.minimum(delta, L - delta)
    distance = delta.sum(axis=-1)
    classes = np.unique(distance)
    index = np.searchsorted(classes, distance)
    for arr in (coords, neighbors, distance, classes, index):
        arr.setflags(write=False)
    bond_arr = np.array(bonds, dtype=np.int64).reshape(-1, 2)
    bond_arr.setflags(write=False)
    geometry = LatticeGeometry(L=L, ndim=ndim, periodic=periodic,
                               coords=coords, neighbor_table=neighbors,
                               bonds=bond_arr, distance_table=distance,
                               distance_classes=classes,
                               distance_index=index)
    logger.debug("built %r with %d bonds", geometry, len(bond_arr))
    return geometry


def build_lattice(L):
    """
    Description: Builds the periodic L x L square lattice.
    Return Values:
    -On Success:    a LatticeGeometry with z = 4, L**2 sites and
                    distance classes 0 .. 2 * floor(L / 2)
    """
    return _build(L, 2, True)


def build_chain(L, periodic=True):
    """
    Description: Builds a ring of L sites (z = 2), or an open chain when
    periodic is False. Open chains pad missing neighbors with -1 and have no
    translations, so they serve exact diagonalization only.
    """
    return _build(L, 1, periodic)


def min_image_l1_distance(geometry, i, j):
    """
    Description: Minimum over periodic images of sum_k |x_k(i) - x_k(j)|.
    Return Values:
    -On Success:    a non-negative int
    """
    i = geometry.check_site(i)
    j = geometry.check_site(j)
    return int(geometry.distance_table[i, j])


def translate_site(geometry, i, v):
    """
    Description: The site T_v(i), i translated by the integer displacement v
    (reduced mod L).
    """
    i = geometry.check_site(i)
    v = np.atleast_1d(np.asarray(v, dtype=np.int64))
    if v.shape != (geometry.ndim,):
        raise LatticeError("displacement {} has the wrong dimension"
                           "".format(tuple(v)))
    return geometry.site(geometry.coords[i] + v)

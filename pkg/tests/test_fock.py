# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import math
import unittest

import numpy as np

from bhvmc.api.fock import FockBasis, FockConfiguration, basis_dimension, \
    enumerate_fixed_n, hop_batch, hop_move, random_configuration
from bhvmc.base.errors import ConfigurationError, DimensionError


class TestFockConfiguration(unittest.TestCase):

    def test_total(self):
        n = FockConfiguration([1, 0, 2])
        self.assertEqual(n.total, 3)
        self.assertEqual(n.n_sites, 3)
        self.assertEqual(np.asarray(n).tolist(), [1, 0, 2])

    def test_negative(self):
        with self.assertRaises(ConfigurationError):
            FockConfiguration([1, -1])

    def test_hop(self):
        n, amp = hop_move([2, 1, 0], 0, 1)
        self.assertEqual(n.occupations, (1, 2, 0))
        self.assertAlmostEqual(amp, math.sqrt(2 * 2))
        self.assertEqual(n.total, 3)
        n2, _ = FockConfiguration([1, 0]).hop(0, 1)
        self.assertEqual(n2.occupations, (0, 1))

    def test_hop_errors(self):
        with self.assertRaises(ConfigurationError):
            hop_move([0, 1], 0, 1)
        with self.assertRaises(ConfigurationError):
            hop_move([1, 1], 0, 0)
        with self.assertRaises(ConfigurationError):
            hop_move([1, 1], 0, 2)

    def test_hop_batch(self):
        out, amp = hop_batch([[1, 0], [0, 3]], [0, 0], [1, 1])
        self.assertEqual(out.tolist(), [[0, 1], [0, 3]])
        self.assertEqual(amp.tolist(), [1.0, 0.0])


class TestFockBasis(unittest.TestCase):

    def test_dimension(self):
        for n_sites, N in [(2, 2), (4, 4), (9, 9), (5, 3)]:
            basis = enumerate_fixed_n(n_sites, N)
            self.assertEqual(basis.dim, math.comb(N + n_sites - 1, N))
            self.assertEqual(len(basis.configs), basis.dim)
            self.assertTrue(np.all(basis.configs.sum(axis=1) == N))
            self.assertEqual(len({tuple(c) for c in basis.configs}),
                             basis.dim)

    def test_descending_order(self):
        basis = FockBasis(3, 2)
        self.assertEqual(basis.configs.tolist(),
                         [[2, 0, 0], [1, 1, 0], [1, 0, 1], [0, 2, 0],
                          [0, 1, 1], [0, 0, 2]])

    def test_index_inverts_enumeration(self):
        basis = FockBasis(6, 5)
        np.testing.assert_array_equal(basis.index(basis.configs),
                                      np.arange(basis.dim))
        self.assertEqual(basis.index([0, 0, 0, 0, 0, 5]), basis.dim - 1)

    def test_index_outside(self):
        basis = FockBasis(3, 2)
        self.assertEqual(basis.index([1, 0, 0]), -1)
        self.assertEqual(basis.index([3, -1, 0]), -1)
        with self.assertRaises(ConfigurationError):
            basis.index([1, 1])

    def test_iteration(self):
        basis = FockBasis(2, 1)
        self.assertEqual([c.occupations for c in basis], [(1, 0), (0, 1)])
        self.assertEqual(basis[1].occupations, (0, 1))

    def test_guard(self):
        self.assertEqual(basis_dimension(16, 16), math.comb(31, 16))
        with self.assertRaises(DimensionError):
            FockBasis(16, 16, max_dim=1000)

    def test_random_configuration(self):
        n = random_configuration(9, 9, np.random.default_rng(3))
        self.assertEqual(n.sum(), 9)
        self.assertEqual(n.shape, (9,))


if __name__ == '__main__':
    unittest.main()

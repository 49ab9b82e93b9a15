# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import math
import unittest

import numpy as np

from bhvmc.api.ansatz import bare_jastrow
from bhvmc.api.fock import FockBasis
from bhvmc.api.hamiltonian import ModelParams
from bhvmc.api.lattice import build_chain, build_lattice
from bhvmc.api.oracle import build_hamiltonian_matrix, exact_observables, \
    exact_renyi2, exact_sample_batch, ground_state, solve
from bhvmc.base.errors import DimensionError, SolverError


class TestHamiltonianMatrix(unittest.TestCase):

    def test_dimer_elements(self):
        geo = build_chain(2, periodic=False)
        H = build_hamiltonian_matrix(geo, 2, 1.5, 4.0).toarray()
        # basis (2,0), (1,1), (0,2)
        r2 = np.sqrt(2.0)
        np.testing.assert_allclose(H, [[4.0, -1.5 * r2, 0.0],
                                       [-1.5 * r2, 0.0, -1.5 * r2],
                                       [0.0, -1.5 * r2, 4.0]])

    def test_symmetric(self):
        H = build_hamiltonian_matrix(build_lattice(3), 4, 1.0, 3.0)
        self.assertAlmostEqual(abs(H - H.T).max(), 0.0)

    def test_l2_counts_both_wraps(self):
        H = build_hamiltonian_matrix(build_chain(2), 1, 1.0, 0.0).toarray()
        np.testing.assert_allclose(H, [[0.0, -2.0], [-2.0, 0.0]])

    def test_guard(self):
        with self.assertRaises(DimensionError):
            build_hamiltonian_matrix(build_lattice(3), 9, 1.0, 1.0,
                                     max_nnz=1000)


class TestGroundState(unittest.TestCase):

    def test_single_boson_dimer(self):
        ed = solve(build_chain(2, periodic=False), 1, 1.0, 7.0)
        self.assertAlmostEqual(ed.ground_energy, -1.0)
        np.testing.assert_allclose(ed.ground_vector, [2 ** -0.5] * 2)
        self.assertAlmostEqual(exact_renyi2(ed, [0]), math.log(2.0))

    def test_two_boson_dimer(self):
        for J, U in [(1.0, 0.0), (1.0, 4.0), (0.3, 16.8)]:
            ed = solve(build_chain(2, periodic=False), 2, J, U)
            self.assertAlmostEqual(ed.ground_energy,
                                   U / 2 - math.sqrt(U ** 2 / 4 + 4 * J ** 2))

    def test_free_bosons(self):
        self.assertAlmostEqual(solve(build_chain(4), 2, 1.0, 0.0)
                               .ground_energy, -4.0)
        self.assertAlmostEqual(solve(build_lattice(2), 4, 1.0, 0.0)
                               .ground_energy, -16.0)

    def test_lanczos_matches_dense(self):
        geo = build_chain(6)
        basis = FockBasis(6, 6)
        H = build_hamiltonian_matrix(geo, 6, 1.0, 5.0, basis=basis)
        dense = ground_state(H, basis=basis)
        sparse = ground_state(H, basis=basis, dense_max_dim=10)
        self.assertEqual(dense.method, "dense")
        self.assertEqual(sparse.method, "lanczos")
        self.assertAlmostEqual(dense.ground_energy, sparse.ground_energy,
                               places=10)
        np.testing.assert_allclose(dense.ground_vector, sparse.ground_vector,
                                   atol=1e-8)
        self.assertLess(sparse.residual, 1e-10)

    def test_positive_vector(self):
        ed = solve(build_lattice(2), 4, 1.0, 6.0)
        self.assertTrue(np.all(ed.ground_vector > 0))
        self.assertAlmostEqual(np.linalg.norm(ed.ground_vector), 1.0)
        self.assertEqual(ed.dimension, 35)

    def test_bare_matrix(self):
        ed = ground_state(np.array([[2.0, 1.0], [1.0, 2.0]]))
        self.assertAlmostEqual(ed.ground_energy, 1.0)
        self.assertEqual(ed.dimension, 2)

    def test_residual_guard(self):
        H = build_hamiltonian_matrix(build_chain(3), 3, 1.0, 1.0)
        with self.assertRaises(SolverError):
            ground_state(H, residual_tol=-1.0)


class TestRenyi(unittest.TestCase):

    def setUp(self):
        self.ed = solve(build_chain(6), 6, 1.0, 3.0)

    def test_trivial_partitions(self):
        self.assertEqual(exact_renyi2(self.ed, []), 0.0)
        self.assertEqual(exact_renyi2(self.ed, range(6)), 0.0)
        with self.assertRaises(ValueError):
            exact_renyi2(self.ed, [7])

    def test_complement_symmetry(self):
        for part in ([0], [0, 1], [0, 2, 4], [1, 2, 3]):
            rest = sorted(set(range(6)) - set(part))
            s_a = exact_renyi2(self.ed, part)
            self.assertGreater(s_a, 0.0)
            self.assertAlmostEqual(s_a, exact_renyi2(self.ed, rest),
                                   places=10)

    def test_product_state(self):
        ed = solve(build_chain(4), 4, 0.0, 1.0)
        self.assertAlmostEqual(exact_renyi2(ed, [0, 1]), 0.0)

    def test_guard(self):
        with self.assertRaises(DimensionError):
            exact_renyi2(self.ed, [0, 1, 2], max_dim=10)


class TestObservables(unittest.TestCase):

    def test_free_bosons_condense(self):
        obs = exact_observables(solve(build_lattice(2), 4, 1.0, 0.0))
        np.testing.assert_allclose(obs.obdm, 1.0, atol=1e-10)
        self.assertAlmostEqual(obs.condensate_fraction, 1.0)
        self.assertAlmostEqual(obs.energy, -16.0)
        self.assertLess(obs.energy_variance, 1e-18)

    def test_mott_limit(self):
        obs = exact_observables(solve(build_chain(4), 4, 0.0, 1.0))
        np.testing.assert_allclose(obs.obdm, np.eye(4), atol=1e-12)
        self.assertAlmostEqual(obs.condensate_fraction, 0.25)
        np.testing.assert_allclose(obs.density, 1.0)
        self.assertIn("energy_variance", obs.to_dict())

    def test_density_sums_to_n(self):
        obs = exact_observables(solve(build_lattice(3), 5, 1.0, 4.0), L=3)
        self.assertAlmostEqual(obs.density.sum(), 5.0)
        self.assertAlmostEqual(obs.condensate_fraction,
                               obs.obdm.sum() / 81.0)


class TestExactSampleBatch(unittest.TestCase):

    def test_weights_and_energies(self):
        geo = build_chain(4)
        model = ModelParams(1.0, 2.0, geo)
        wf = bare_jastrow(geo, [0.1, -0.2, 0.0])
        basis = FockBasis(4, 4)
        batch = exact_sample_batch(wf, basis, model=model)
        self.assertAlmostEqual(batch.weights.sum(), 1.0)
        self.assertEqual(batch.log_grads.shape, (basis.dim, 3))
        H = build_hamiltonian_matrix(geo, 4, 1.0, 2.0, basis=basis)
        psi = np.exp(wf.log_psi(basis.configs))
        rayleigh = psi @ (H @ psi) / (psi @ psi)
        self.assertAlmostEqual(batch.mean(batch.local_energies), rayleigh,
                               places=10)

    def test_drops_zero_amplitudes(self):
        geo = build_chain(4)
        ed = solve(geo, 4, 0.0, 1.0)
        batch = exact_sample_batch(ed.table_ansatz(geo), ed.basis)
        self.assertEqual(batch.n_samples, 1)
        np.testing.assert_array_equal(batch.configs, [[1, 1, 1, 1]])
        self.assertIsNone(batch.log_grads)


if __name__ == '__main__':
    unittest.main()

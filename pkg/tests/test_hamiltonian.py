# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import unittest

import numpy as np

from bhvmc.api.ansatz import bare_jastrow
from bhvmc.api.fock import FockBasis
from bhvmc.api.hamiltonian import ModelParams, TableAnsatz, \
    condensate_fraction, local_energy, mean_field_energy, \
    one_body_density_matrix
from bhvmc.api.lattice import build_chain, build_lattice
from bhvmc.api.oracle import exact_observables, exact_sample_batch, solve
from bhvmc.api.sampler import SampleBatch, SamplerConfig, run_sampling
from bhvmc.base.errors import AmplitudeError, ConfigurationError


class TestModel(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            ModelParams(J=-1.0, U=1.0, geometry=build_chain(4))
        ModelParams(J=0.0, U=0.0, geometry=build_chain(4))

    def test_directed_hops(self):
        model = ModelParams(1.0, 1.0, build_lattice(3))
        src, dst = model.directed_hops()
        self.assertEqual(len(src), 36)
        pairs = set(zip(src.tolist(), dst.tolist()))
        self.assertEqual(len(pairs), 36)
        for s, d in pairs:
            self.assertIn((d, s), pairs)

    def test_diagonal(self):
        model = ModelParams(1.0, 2.0, build_chain(3))
        np.testing.assert_allclose(model.diagonal([[3, 0, 0], [1, 1, 1]]),
                                   [6.0, 0.0])


class TestLocalEnergy(unittest.TestCase):

    def test_uniform_state(self):
        geo = build_chain(6)
        model = ModelParams(J=1.0, U=5.0, geometry=geo)
        wf = bare_jastrow(geo)
        self.assertAlmostEqual(
            local_energy(model, wf, None, np.ones(6, int)),
            -12 * np.sqrt(2.0))
        # n = (2, 0, 1, 1, 1, 1): U + hops weighted by sqrt(n_s (n_d + 1))
        n = np.array([2, 0, 1, 1, 1, 1])
        expected = 5.0 - (3.0 + np.sqrt(3.0) + 7.0 * np.sqrt(2.0))
        self.assertAlmostEqual(local_energy(model, wf, None, n), expected)

    def test_atomic_limit(self):
        geo = build_lattice(3)
        model = ModelParams(J=0.0, U=3.0, geometry=geo)
        configs = np.array([[9, 0, 0, 0, 0, 0, 0, 0, 0], [1] * 9])
        np.testing.assert_allclose(
            local_energy(model, bare_jastrow(geo, [0.1, 0.2, 0.3]), None,
                         configs),
            [108.0, 0.0])

    def test_exact_eigenstate_has_flat_local_energy(self):
        geo = build_chain(5)
        ed = solve(geo, 5, 1.0, 4.0)
        model = ModelParams(J=1.0, U=4.0, geometry=geo)
        table = ed.table_ansatz(geo)
        energies = local_energy(model, table, None, ed.basis.configs)
        np.testing.assert_allclose(energies, ed.ground_energy, atol=1e-9)
        born = exact_sample_batch(table, ed.basis, model, with_grads=False)
        spread = born.statistics(born.local_energies)
        self.assertLess(spread.variance, 1e-18)
        self.assertAlmostEqual(spread.mean, ed.ground_energy, places=10)

    def test_params_override(self):
        geo = build_chain(4)
        model = ModelParams(J=1.0, U=2.0, geometry=geo)
        wf = bare_jastrow(geo)
        other = bare_jastrow(geo, [0.0, -0.3, 0.1])
        n = np.array([2, 0, 1, 1])
        self.assertAlmostEqual(local_energy(model, wf, other.params, n),
                               local_energy(model, other, None, n))

    def test_nan_ratio_raises(self):
        geo = build_chain(3)
        basis = FockBasis(3, 3)

        class Broken(TableAnsatz):
            def log_ratio_hops(self, configs, src, dst, log_psi=None):
                return np.full(np.shape(src), np.nan)

        wf = Broken(geo, basis, np.ones(basis.dim))
        with self.assertRaises(AmplitudeError):
            local_energy(ModelParams(1.0, 1.0, geo), wf, None, [1, 1, 1])


class TestTableAnsatz(unittest.TestCase):

    def test_lookup(self):
        geo = build_chain(3)
        basis = FockBasis(3, 2)
        amps = np.arange(basis.dim, dtype=float)
        table = TableAnsatz(geo, basis, amps)
        self.assertEqual(table.log_psi([2, 0, 0]), -np.inf)
        self.assertAlmostEqual(table.log_psi([0, 0, 2]), np.log(5.0))
        self.assertEqual(table.log_psi([1, 0, 0]), -np.inf)
        r = table.log_ratio_hops([[1, 0, 0]], [[0]], [[1]])
        self.assertEqual(r[0, 0], -np.inf)
        with self.assertRaises(ConfigurationError):
            TableAnsatz(geo, basis, -amps)

    def test_from_wavefunction(self):
        geo = build_chain(4)
        basis = FockBasis(4, 4)
        wf = bare_jastrow(geo, [0.1, -0.2, 0.05])
        table = TableAnsatz.from_wavefunction(wf, basis)
        diff = table.log_psi(basis.configs) - wf.log_psi(basis.configs)
        np.testing.assert_allclose(diff, diff[0], atol=1e-12)


class TestDensityMatrix(unittest.TestCase):

    def test_exact_weights_match_exact_obdm(self):
        geo = build_lattice(2)
        model = ModelParams(J=1.0, U=3.0, geometry=geo)
        ed = solve(geo, 4, 1.0, 3.0)
        table = ed.table_ansatz(geo)
        batch = exact_sample_batch(table, ed.basis, with_grads=False)
        estimate = one_body_density_matrix(model, table, None, batch)
        exact = exact_observables(ed)
        np.testing.assert_allclose(estimate.matrix, exact.obdm, atol=1e-10)
        self.assertAlmostEqual(estimate.condensate_fraction,
                               exact.condensate_fraction, places=10)
        self.assertAlmostEqual(estimate.rho0.error, 0.0)

    def test_uniform_ring_is_fully_condensed(self):
        geo = build_chain(4)
        model = ModelParams(J=1.0, U=0.0, geometry=geo)
        ed = solve(geo, 2, 1.0, 0.0)
        table = ed.table_ansatz(geo)
        batch = exact_sample_batch(table, ed.basis, with_grads=False)
        rho = one_body_density_matrix(model, table, None, batch)
        # free bosons: every particle in k = 0, <a_i^+ a_j> = N / n_sites
        np.testing.assert_allclose(rho.matrix, 0.5, atol=1e-10)
        self.assertAlmostEqual(rho.condensate_fraction, 0.5)

    def test_plain_configs(self):
        geo = build_chain(4)
        model = ModelParams(J=1.0, U=1.0, geometry=geo)
        rho = one_body_density_matrix(model, bare_jastrow(geo), None,
                                      np.ones((3, 4), dtype=int))
        np.testing.assert_allclose(np.diag(rho.matrix), 1.0)
        np.testing.assert_allclose(rho.matrix[0, 1], np.sqrt(2.0))
        self.assertEqual(len(rho.displacements), 4)

    def test_sampled_matches_exact_within_errors(self):
        geo = build_chain(4)
        model = ModelParams(J=1.0, U=8.0, geometry=geo)
        ed = solve(geo, 4, 1.0, 8.0)
        table = ed.table_ansatz(geo)
        cfg = SamplerConfig(n_chains=8, n_samples=16000, burn_in_sweeps=50,
                            sweeps_per_sample=2, seed=5)
        estimate = one_body_density_matrix(model, table, None,
                                           run_sampling(cfg, table, 4))
        exact = exact_observables(ed)
        deviation = np.abs(estimate.matrix - exact.obdm)
        self.assertTrue(np.all(deviation <= 3 * estimate.errors + 1e-10),
                        deviation / np.maximum(estimate.errors, 1e-300))
        self.assertLess(abs(estimate.condensate_fraction -
                            exact.condensate_fraction),
                        3 * estimate.rho0.error)

    def test_max_samples_thins_every_chain(self):
        geo = build_chain(4)
        model = ModelParams(J=1.0, U=1.0, geometry=geo)
        wf = bare_jastrow(geo)
        chain_a = np.tile([1, 1, 1, 1], (6, 1))
        chain_b = np.tile([2, 0, 1, 1], (6, 1))
        batch = SampleBatch(configs=np.vstack([chain_a, chain_b]),
                            log_psi=np.zeros(12), n_chains=2)
        thinned = one_body_density_matrix(model, wf, None, batch,
                                          max_samples=4)
        kept = np.vstack([chain_a[[0, 3]], chain_b[[0, 3]]])
        direct = one_body_density_matrix(model, wf, None, kept)
        np.testing.assert_allclose(thinned.matrix, direct.matrix)
        self.assertEqual(thinned.rho0.n_samples, 4)
        self.assertGreater(thinned.errors[0, 1], 0.0)


class TestReferences(unittest.TestCase):

    def test_condensate_fraction(self):
        self.assertEqual(condensate_fraction(np.ones((4, 4))), 1.0)
        self.assertEqual(condensate_fraction(np.ones((4, 4)), L=2), 1.0)
        self.assertAlmostEqual(condensate_fraction(np.eye(9)), 1.0 / 9)

    def test_mean_field(self):
        self.assertAlmostEqual(mean_field_energy(16.8, 1.0, 1.0, 4), 4.4)
        self.assertAlmostEqual(mean_field_energy(16.8, 1.0, 1.0, 4, 16),
                               70.4)
        self.assertAlmostEqual(mean_field_energy(0.0, 1.0, 2.0, 2), -4.0)


if __name__ == '__main__':
    unittest.main()

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import math
import unittest

import numpy as np

from bhvmc.api.ansatz import AnsatzParameters, AnsatzSpec, BackflowJastrow, \
    ParameterLayout, backflow_features, bare_jastrow, gelu, gelu_grad, \
    init_parameters, log_grad, log_psi, log_psi_mf_prior, rescale_input
from bhvmc.api.fock import random_configuration
from bhvmc.api.lattice import build_chain, build_lattice
from bhvmc.base.errors import ConfigurationError, LatticeError


def random_params(geometry, spec, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    params = init_parameters(geometry, spec, rng)
    params.block("jastrow")[...] = rng.normal(0.0, scale,
                                              geometry.n_distance_classes)
    if spec.has_backflow:
        params.block("mixing")[...] = rng.normal(0.0, scale, spec.channels)
        for layer in spec.norm_layers:
            params.block("norm{}.gain".format(layer))[...] += \
                rng.normal(0.0, 0.1, spec.channels)
            params.block("norm{}.offset".format(layer))[...] = \
                rng.normal(0.0, 0.1, spec.channels)
        for layer in range(1, spec.depth + 1):
            params.block("conv{}.bias".format(layer))[...] = \
                rng.normal(0.0, 0.1, spec.channels)
    return params


def random_configs(n_sites, N, count, seed=1):
    rng = np.random.default_rng(seed)
    return np.stack([random_configuration(n_sites, N, rng)
                     for _ in range(count)])


class TestActivation(unittest.TestCase):

    def test_gelu(self):
        self.assertEqual(gelu(0.0), 0.0)
        self.assertAlmostEqual(gelu(1.0), 0.8413447460685429)
        x = np.linspace(-3, 3, 13)
        h = 1e-6
        np.testing.assert_allclose(gelu_grad(x),
                                   (gelu(x + h) - gelu(x - h)) / (2 * h),
                                   atol=1e-8)

    def test_rescale(self):
        np.testing.assert_allclose(rescale_input([0, 1, 2], 1.0), [-1, 0, 1])
        with self.assertRaises(ConfigurationError):
            rescale_input([0, 0], 0.0)

    def test_prior(self):
        # ln of sqrt(N! / prod n_i!)
        self.assertAlmostEqual(log_psi_mf_prior([1, 1]), 0.5 * np.log(2))
        self.assertAlmostEqual(log_psi_mf_prior([2, 0]), 0.0)


class TestLayout(unittest.TestCase):

    def test_sizes(self):
        geo = build_lattice(3)
        self.assertEqual(ParameterLayout(geo, AnsatzSpec(0)).size, 3)
        two = ParameterLayout(geo, AnsatzSpec(2, channels=4,
                                              kernel_radius=1))
        self.assertEqual(two.size, 3 + 36 + 4 + 144 + 4 + 4)
        four = ParameterLayout(geo, AnsatzSpec(4, channels=4,
                                               kernel_radius=1))
        self.assertEqual(four.size, two.size + 2 * (144 + 4) + 8)
        self.assertEqual([name for name, _ in four.blocks][-3:],
                         ["norm3.gain", "norm3.offset", "mixing"])

    def test_masks(self):
        layout = ParameterLayout(build_lattice(3),
                                 AnsatzSpec(2, channels=2))
        jastrow = layout.mask("jastrow")
        self.assertEqual(jastrow.sum(), 3)
        self.assertTrue(jastrow[:3].all())
        np.testing.assert_array_equal(layout.mask("backflow"), ~jastrow)
        self.assertTrue(layout.mask("all").all())
        with self.assertRaises(ValueError):
            layout.mask("everything")

    def test_bad_specs(self):
        with self.assertRaises(ConfigurationError):
            AnsatzSpec(3)
        with self.assertRaises(ConfigurationError):
            AnsatzSpec(2, channels=0)
        with self.assertRaises(LatticeError):
            bare_jastrow(build_chain(4, periodic=False))

    def test_flat_length(self):
        layout = ParameterLayout(build_lattice(3), AnsatzSpec(0))
        with self.assertRaises(ConfigurationError):
            AnsatzParameters(layout, np.zeros(4))

    def test_init(self):
        geo = build_lattice(3)
        spec = AnsatzSpec(4, channels=3)
        params = init_parameters(geo, spec, np.random.default_rng(0),
                                 jastrow=[0.1, 0.2, 0.3])
        np.testing.assert_allclose(params.jastrow.w, [0.1, 0.2, 0.3])
        np.testing.assert_array_equal(params.block("mixing"), 0.0)
        np.testing.assert_array_equal(params.block("norm3.gain"), 1.0)
        self.assertGreater(np.abs(params.block("conv2.kernel")).sum(), 0)

    def test_dict_round_trip(self):
        geo = build_lattice(3)
        params = random_params(geo, AnsatzSpec(2, channels=2))
        again = AnsatzParameters.from_dict(geo, params.to_dict())
        np.testing.assert_array_equal(again.flat, params.flat)


class TestBareJastrow(unittest.TestCase):

    def setUp(self):
        self.geo = build_lattice(3)
        self.w = np.array([-0.4, 0.2, -0.1])
        self.configs = random_configs(9, 9, 20)

    def test_quadratic_form(self):
        wf = bare_jastrow(self.geo, self.w)
        W = self.w[self.geo.distance_table]
        x = self.configs - 1.0
        expected = np.einsum('bi,ij,bj->b', x, W, x)
        np.testing.assert_allclose(wf.log_psi(self.configs), expected,
                                   atol=1e-12)
        self.assertAlmostEqual(wf.log_psi(np.ones(9, dtype=int)), 0.0)

    def test_fast_ratios_match_direct(self):
        for prior in (False, True):
            wf = bare_jastrow(self.geo, self.w, use_prior=prior)
            hops = self.geo.bonds
            B = len(self.configs)
            src = np.broadcast_to(hops[:, 0], (B, len(hops)))
            dst = np.broadcast_to(hops[:, 1], (B, len(hops)))
            fast = wf.log_ratio_hops(self.configs, src, dst)
            slow = super(BackflowJastrow, wf).log_ratio_hops(
                self.configs, src, dst)
            finite = np.isfinite(slow)
            np.testing.assert_array_equal(np.isfinite(fast), finite)
            np.testing.assert_allclose(fast[finite], slow[finite],
                                       atol=1e-10)

    def test_empty_source(self):
        wf = bare_jastrow(self.geo, self.w)
        n = np.array([[0, 9, 0, 0, 0, 0, 0, 0, 0]])
        r = wf.log_ratio_hops(n, [[0, 1]], [[1, 0]])
        self.assertEqual(r[0, 0], -np.inf)
        self.assertTrue(np.isfinite(r[0, 1]))

    def test_jastrow_gradient_is_correlation(self):
        wf = bare_jastrow(self.geo, self.w)
        lp, grads = wf.log_psi_and_grad(self.configs)
        np.testing.assert_allclose(grads @ self.w, lp, atol=1e-12)


class TestBackflow(unittest.TestCase):

    def check_gradient(self, depth, draws=100):
        geo = build_lattice(3)
        spec = AnsatzSpec(depth, channels=4, kernel_radius=1)
        h = 1e-5
        for seed in range(draws):
            params = random_params(geo, spec, seed=seed)
            wf = BackflowJastrow(geo, params)
            config = random_configs(9, 9, 1, seed=draws + seed)
            lp, grads = wf.log_psi_and_grad(config)
            np.testing.assert_allclose(lp, wf.log_psi(config), atol=1e-12)
            numeric = np.empty_like(grads)
            for k in range(params.size):
                plus = params.copy()
                plus.flat[k] += h
                minus = params.copy()
                minus.flat[k] -= h
                numeric[:, k] = (wf.with_params(plus).log_psi(config) -
                                 wf.with_params(minus).log_psi(config)) / \
                    (2 * h)
            # absolute floor for components that vanish
            np.testing.assert_allclose(grads, numeric, rtol=1e-6, atol=1e-8,
                                       err_msg="seed {}".format(seed))

    def test_gradient_depth_2(self):
        self.check_gradient(2)

    def test_gradient_depth_4(self):
        self.check_gradient(4)

    def test_zero_mixing_is_bare_jastrow(self):
        geo = build_lattice(3)
        params = init_parameters(geo, AnsatzSpec(2, channels=3),
                                 np.random.default_rng(4),
                                 jastrow=[0.3, -0.2, 0.1])
        configs = random_configs(9, 9, 5)
        np.testing.assert_allclose(
            log_psi(params, geo, configs),
            bare_jastrow(geo, [0.3, -0.2, 0.1]).log_psi(configs), atol=1e-12)

    def test_translation_invariance(self):
        geo = build_lattice(4)
        params = random_params(geo, AnsatzSpec(4, channels=3), seed=7)
        wf = BackflowJastrow(geo, params)
        configs = random_configs(16, 16, 4)
        for v in [(1, 0), (2, 3)]:
            perm = geo.translation_permutation(v)
            shifted = np.empty_like(configs)
            shifted[:, perm] = configs
            np.testing.assert_allclose(wf.log_psi(shifted),
                                       wf.log_psi(configs), atol=1e-10)

    def test_features_follow_translations(self):
        geo = build_lattice(4)
        params = random_params(geo, AnsatzSpec(4, channels=3), seed=8)
        wf = BackflowJastrow(geo, params)
        configs = random_configs(16, 16, 4, seed=9)
        features = wf.backflow_features(configs)
        for v in geo.all_translations():
            perm = geo.translation_permutation(v)
            shifted = np.empty_like(configs)
            shifted[:, perm] = configs
            np.testing.assert_allclose(wf.backflow_features(shifted)[:, perm],
                                       features, atol=1e-12)

    def test_pointwise_network_by_hand(self):
        geo = build_lattice(3)
        spec = AnsatzSpec(4, channels=3, kernel_radius=0)
        params = random_params(geo, spec, seed=11)
        n = np.array([0, 2, 1, 3, 0, 1, 1, 0, 1])
        nbar = n.sum() / 9.0

        def act(v):
            return np.array([0.5 * t * (1.0 + math.erf(t / math.sqrt(2.0)))
                             for t in v])

        kernels = [params.block("conv{}.kernel".format(l))[0]
                   for l in range(1, 5)]
        biases = [params.block("conv{}.bias".format(l)) for l in range(1, 5)]
        gain = params.block("norm3.gain")
        offset = params.block("norm3.offset")
        mixing = params.block("mixing")
        expected = []
        for i in range(9):
            x = n[i] / nbar - 1.0
            h = [np.array([x])]
            for l in range(4):
                out = act(kernels[l] @ h[-1] + biases[l])
                if l == 2:
                    z = h[1] + out
                    mu = z.mean()
                    var = ((z - mu) ** 2).mean()
                    out = (z - mu) / math.sqrt(var + spec.layer_norm_eps) \
                        * gain + offset
                h.append(out)
            expected.append(x + h[-1] @ mixing)
        np.testing.assert_allclose(backflow_features(params, geo, n),
                                   expected, atol=1e-12)

    def test_zero_mixing_features_are_rescaled_input(self):
        geo = build_lattice(3)
        params = random_params(geo, AnsatzSpec(2, channels=3), seed=12)
        params.block("mixing")[...] = 0.0
        configs = random_configs(9, 12, 5, seed=13)
        np.testing.assert_allclose(
            backflow_features(params, geo, configs),
            rescale_input(configs, 12 / 9.0), atol=1e-15)

    def test_generic_ratios(self):
        geo = build_lattice(3)
        wf = BackflowJastrow(geo, random_params(geo, AnsatzSpec(2,
                                                                channels=2)))
        configs = random_configs(9, 9, 4)
        src = np.array([[0, 4]] * 4)
        dst = np.array([[1, 5]] * 4)
        ratios = wf.log_ratio_hops(configs, src, dst)
        for b in range(4):
            for h in range(2):
                s, d = src[b, h], dst[b, h]
                if configs[b, s] == 0:
                    self.assertEqual(ratios[b, h], -np.inf)
                    continue
                moved = configs[b].copy()
                moved[s] -= 1
                moved[d] += 1
                self.assertAlmostEqual(ratios[b, h],
                                       wf.log_psi(moved) -
                                       wf.log_psi(configs[b]), places=10)

    def test_functional_forms(self):
        geo = build_lattice(3)
        spec = AnsatzSpec(2, channels=2)
        params = random_params(geo, spec)
        n = random_configs(9, 9, 1)[0]
        self.assertEqual(backflow_features(params, geo, n).shape, (9,))
        self.assertEqual(log_grad(params, geo, n).shape, (params.size,))
        self.assertIsInstance(float(log_psi(params, geo, n)), float)
        with self.assertRaises(ConfigurationError):
            backflow_features(init_parameters(geo, AnsatzSpec(0)), geo, n)


if __name__ == '__main__':
    unittest.main()

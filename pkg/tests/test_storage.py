# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import hashlib
import os
import shutil
import tempfile
import unittest

import numpy as np

from bhvmc.api.ansatz import AnsatzSpec, init_parameters
from bhvmc.api.lattice import build_chain, build_lattice
from bhvmc.api.stats import ObservableEstimate
from bhvmc.base import storage


class StorageTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def path(self, name):
        return os.path.join(self.tmp, name)


class TestCheckpoint(StorageTestCase):

    def test_round_trip(self):
        geo = build_lattice(3)
        spec = AnsatzSpec(2, channels=3, kernel_radius=1, use_prior=True)
        params = init_parameters(geo, spec, np.random.default_rng(0),
                                 jastrow=[0.1, -0.2, 0.3])
        storage.save_checkpoint(self.path("a.ckpt"), params, geo, step=42)
        ckpt = storage.load_checkpoint(self.path("a.ckpt"))
        self.assertEqual(ckpt.step, 42)
        self.assertEqual(ckpt.geometry.L, 3)
        self.assertEqual(ckpt.geometry.ndim, 2)
        self.assertEqual(ckpt.params.spec, spec)
        np.testing.assert_array_equal(ckpt.params.flat, params.flat)

    def test_chain_geometry(self):
        geo = build_chain(6)
        params = init_parameters(geo, AnsatzSpec(0), jastrow=[1, 2, 3, 4])
        storage.save_checkpoint(self.path("c.ckpt"), params, geo)
        ckpt = storage.load_checkpoint(self.path("c.ckpt"))
        self.assertEqual(ckpt.geometry.ndim, 1)
        self.assertTrue(ckpt.geometry.periodic)
        np.testing.assert_array_equal(ckpt.params.jastrow.w, [1, 2, 3, 4])

    def test_corrupt_files(self):
        with open(self.path("bad.ckpt"), "wb") as f:
            f.write(b"not a checkpoint")
        with self.assertRaises(ValueError):
            storage.load_checkpoint(self.path("bad.ckpt"))
        geo = build_lattice(3)
        storage.save_checkpoint(self.path("t.ckpt"),
                                init_parameters(geo, AnsatzSpec(0)), geo)
        with open(self.path("t.ckpt"), "rb") as f:
            data = f.read()
        with open(self.path("t.ckpt"), "wb") as f:
            f.write(data[:-4])
        with self.assertRaises(ValueError):
            storage.load_checkpoint(self.path("t.ckpt"))

    def test_parameters_json(self):
        geo = build_chain(4)
        params = init_parameters(geo, AnsatzSpec(0), jastrow=[1.0, 0.5, 0.0])
        storage.export_parameters_json(self.path("p.json"), params, geo)
        data = storage.read_json(self.path("p.json"))
        self.assertEqual(data["blocks"]["jastrow"], [1.0, 0.5, 0.0])
        self.assertEqual(data["L"], 4)
        self.assertEqual(data["depth"], 0)


class TestFiles(StorageTestCase):

    def test_chains(self):
        chains = np.arange(12).reshape(3, 4)
        storage.save_chains(self.path("chains.bin"), chains)
        again = storage.load_chains(self.path("chains.bin"))
        np.testing.assert_array_equal(again, chains)
        self.assertEqual(again.dtype, np.int64)

    def test_json_defaults(self):
        storage.atomic_write_json(
            {"array": np.arange(3), "scalar": np.float64(1.5),
             "estimate": ObservableEstimate(1.0, 0.1, 0.2)},
            self.path("sub/x.json"))
        data = storage.read_json(self.path("sub/x.json"))
        self.assertEqual(data["array"], [0, 1, 2])
        self.assertEqual(data["scalar"], 1.5)
        self.assertEqual(data["estimate"]["error"], 0.1)
        self.assertEqual([f for f in os.listdir(self.path("sub"))
                          if f.startswith(".tmp-")], [])

    def test_manifest(self):
        manifest = storage.write_manifest(self.tmp, "[model]\nL = 4\n",
                                          {"sampler": 1}, {"workers": 2})
        on_disk = storage.read_json(self.path("manifest.json"))
        self.assertEqual(on_disk["config_sha256"],
                         hashlib.sha256(b"[model]\nL = 4\n").hexdigest())
        self.assertEqual(on_disk["seeds"], {"sampler": 1})
        self.assertEqual(on_disk["workers"], 2)
        self.assertIn("numpy", manifest["environment"])

    def test_trace(self):
        trace = self.path("trace.csv")
        with storage.TraceWriter(trace) as writer:
            for step in range(4):
                writer.write({"step": step, "stage": "jastrow",
                              "E_mean": -float(step)})
        self.assertEqual(storage.truncate_trace(trace, 2), 2)
        with storage.TraceWriter(trace, append=True) as writer:
            writer.write({"step": 2, "stage": "jastrow", "E_mean": -9.0})
        rows = storage.read_trace(trace)
        self.assertEqual([r["step"] for r in rows], ["0", "1", "2"])
        self.assertEqual(rows[2]["E_mean"], "-9.0")
        self.assertEqual(rows[0]["vscore"], "")

    def test_csv_columns(self):
        storage.write_csv(self.path("d.csv"), ["L", "S2", "S2_err"],
                          [[4, 1.5, 0.1], [6, 2.0, 0.1]])
        cols = storage.read_csv_columns(self.path("d.csv"))
        np.testing.assert_allclose(cols["L"], [4, 6])
        np.testing.assert_allclose(cols["S2"], [1.5, 2.0])
        storage.write_csv(self.path("e.csv"), ["L"], [])
        with self.assertRaises(ValueError):
            storage.read_csv_columns(self.path("e.csv"))


if __name__ == '__main__':
    unittest.main()

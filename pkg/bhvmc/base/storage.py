# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Storage
Everything that touches the disk: atomic writers, parameter checkpoints
(binary and JSON), chain sidecars, the run manifest and the CSV trace.

Binary checkpoint layout (all little endian):
    8 bytes   magic b"BHVMCKP\\0"
    int64     format version
    int64[9]  L, ndim, periodic, depth, channels, kernel_radius, use_prior,
              step, n_params
    float64[n_params]  the flat parameter vector
"""
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"BHVMCKP\0"
CHECKPOINT_VERSION = 1
_HEADER = np.dtype("<i8")

TRACE_FIELDS = ["step", "stage", "E_mean", "E_err", "VarE", "vscore",
                "acceptance_rate", "wall_time"]


def atomic_write_bytes(path, data):
    """Writes through a temporary file in the same directory and renames."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(obj, path):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True,
                                       default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError("cannot serialize {!r}".format(type(obj)))


def read_json(path):
    with open(path, "r") as f:
        return json.load(f)


def compute_config_hash(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def capture_environment():
    return {"python": sys.version.split()[0],
            "platform": platform.platform(),
            "numpy": np.__version__,
            "scipy": _scipy_version()}


def _scipy_version():
    import scipy
    return scipy.__version__


def write_manifest(run_dir, config_text, seeds, extra=None):
    """manifest.json: config hash, code version, seeds and environment."""
    from bhvmc import __version__
    manifest = {"config_sha256": compute_config_hash(config_text),
                "version": __version__,
                "seeds": seeds,
                "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
                "environment": capture_environment()}
    if extra:
        manifest.update(extra)
    path = os.path.join(run_dir, "manifest.json")
    atomic_write_json(manifest, path)
    return manifest


@dataclass(frozen=True)
class Checkpoint:
    params: object
    geometry: object
    step: int


def save_checkpoint(path, params, geometry, step=0):
    spec = params.spec
    header = np.array([geometry.L, geometry.ndim, int(geometry.periodic),
                       spec.depth, spec.channels, spec.kernel_radius,
                       int(spec.use_prior), int(step), params.size],
                      dtype=_HEADER)
    payload = b"".join([CHECKPOINT_MAGIC,
                        np.array([CHECKPOINT_VERSION], dtype=_HEADER)
                        .tobytes(),
                        header.tobytes(),
                        params.flat.astype("<f8").tobytes()])
    atomic_write_bytes(path, payload)
    logger.debug("checkpoint written to %s (step %d)", path, step)


def load_checkpoint(path):
    """
    Description: Reads a binary checkpoint and rebuilds its geometry and
    parameter layout.
    Return Values:
    -On Success:    a Checkpoint(params, geometry, step)
    -On Failure:    ValueError on a bad magic, version or length
    """
    from bhvmc.api.ansatz import AnsatzParameters, AnsatzSpec, \
        ParameterLayout
    from bhvmc.api.lattice import build_chain, build_lattice

    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError("{} is not a bhvmc checkpoint".format(path))
    offset = len(CHECKPOINT_MAGIC)
    version = int(np.frombuffer(data, _HEADER, 1, offset)[0])
    if version != CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint version {}".format(version))
    offset += _HEADER.itemsize
    (L, ndim, periodic, depth, channels, radius, prior, step,
     n_params) = (int(x) for x in np.frombuffer(data, _HEADER, 9, offset))
    offset += 9 * _HEADER.itemsize
    if len(data) - offset != 8 * n_params:
        raise ValueError("truncated checkpoint {}".format(path))
    flat = np.frombuffer(data, "<f8", n_params, offset).astype(np.float64)
    geometry = build_lattice(L) if ndim == 2 else \
        build_chain(L, periodic=bool(periodic))
    spec = AnsatzSpec(depth=depth, channels=channels, kernel_radius=radius,
                      use_prior=bool(prior))
    layout = ParameterLayout(geometry, spec)
    if layout.size != n_params:
        raise ValueError("checkpoint holds {} parameters, layout needs {}"
                         "".format(n_params, layout.size))
    return Checkpoint(AnsatzParameters(layout, flat), geometry, step)


def export_parameters_json(path, params, geometry):
    data = params.to_dict()
    data.update({"L": geometry.L, "ndim": geometry.ndim,
                 "periodic": geometry.periodic})
    atomic_write_json(data, path)


def save_chains(path, configs):
    """Final chain configurations, read back to resume sampling."""
    arr = np.ascontiguousarray(configs, dtype="<i8")
    header = np.array(arr.shape, dtype=_HEADER).tobytes()
    atomic_write_bytes(path, header + arr.tobytes())


def load_chains(path):
    with open(path, "rb") as f:
        data = f.read()
    shape = tuple(int(x) for x in np.frombuffer(data, _HEADER, 2))
    return np.frombuffer(data, "<i8", shape[0] * shape[1],
                         2 * _HEADER.itemsize).reshape(shape).astype(np.int64)


class TraceWriter(object):
    """Appends training rows to trace.csv, flushing after every row."""

    def __init__(self, path, fields=None, append=False):
        self.path = path
        self.fields = fields or TRACE_FIELDS
        exists = append and os.path.exists(path)
        self._file = open(path, "a" if exists else "w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=self.fields)
        if not exists:
            self._writer.writeheader()

    def write(self, row):
        self._writer.writerow({k: row.get(k, "") for k in self.fields})
        self._file.flush()

    def close(self):
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_trace(path):
    with open(path, "r", newline="") as f:
        return list(csv.DictReader(f))


def truncate_trace(path, step, fields=None):
    """Drops trace rows at or after `step`, as a resumed run rewrites them."""
    if not os.path.exists(path):
        return 0
    fields = fields or TRACE_FIELDS
    kept = [r for r in read_trace(path) if int(r["step"]) < step]
    write_csv(path, fields, [[r.get(k, "") for k in fields] for r in kept])
    return len(kept)


def write_csv(path, fields, rows):
    lines = []
    with tempfile.TemporaryFile("w+", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(fields)
        writer.writerows(rows)
        f.seek(0)
        lines = f.read()
    atomic_write_text(path, lines)


def read_csv_columns(path):
    """Numeric CSV as {column: float array}."""
    with open(path, "r", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError("{} holds no data rows".format(path))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}

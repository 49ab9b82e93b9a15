# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Constructions
Two-layer ReLU convolutional networks with hand-built weights that
reproduce two diagonal correlators exactly:

    * the generalized Gutzwiller projector, g * (number of sites i at which
      the occupation pattern around i matches a target patch),
    * the holon-doublon confinement potential -sum_ij V_dij h_i d_j.

Both come with the direct formula they must equal, and CnnWeights.evaluate
runs any such network on batches of configurations.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from bhvmc.base.errors import ConfigurationError, LatticeError
from bhvmc.base.helpers import config_batch

logger = logging.getLogger(__name__)


def relu(x):
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class PatchSpec:
    """
    offsets: displacements v of the patch; targets: value x_v wanted at
    T_v(i), measured on n - center; strength: g; shift: Delta x of the
    second layer; input_shift: xi added to the network input so that no
    shifted target x_v + xi is zero.
    """
    offsets: tuple
    targets: tuple
    strength: float
    shift: float
    center: float = 0.0
    input_shift: float = 0.0

    def __post_init__(self):
        offsets = tuple(tuple(int(c) for c in np.atleast_1d(v))
                        for v in self.offsets)
        targets = tuple(float(x) for x in self.targets)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "targets", targets)
        if not offsets or len(offsets) != len(targets):
            raise ConfigurationError("need one target per offset")
        if len(set(offsets)) != len(offsets):
            raise ConfigurationError("patch offsets must be distinct")
        if len({len(v) for v in offsets}) != 1:
            raise ConfigurationError("offsets of mixed dimension")
        shifted = self.shifted_targets
        if np.any(shifted == 0):
            raise ConfigurationError("target value 0 needs a nonzero "
                                     "input_shift")
        if not self.shift > np.max(np.abs(shifted)):
            raise ConfigurationError("shift {} must exceed every shifted "
                                     "target {}".format(self.shift,
                                                        shifted.tolist()))

    @property
    def shifted_targets(self):
        return np.asarray(self.targets) + self.input_shift

    @property
    def ndim(self):
        return len(self.offsets[0])

    @classmethod
    def holon_doublon(cls, strength, axis=0, ndim=2, shift=2.0):
        """A hole at i next to a doublon at i + e_axis (unit filling)."""
        step = [0] * ndim
        step[axis] = 1
        return cls(offsets=((0,) * ndim, tuple(step)), targets=(-1, 1),
                   strength=strength, shift=shift, center=1.0)


@dataclass(frozen=True)
class ConfinementSpec:
    """potentials[d - 1] = V_d <= 0 for 1 <= d <= R."""
    potentials: tuple

    def __post_init__(self):
        pots = tuple(float(v) for v in self.potentials)
        object.__setattr__(self, "potentials", pots)
        if not pots:
            raise ConfigurationError("confinement range must be >= 1")
        if any(v > 0 for v in pots):
            raise ConfigurationError("potentials must be non-positive, got "
                                     "{}".format(pots))

    @property
    def range(self):
        return len(self.potentials)

    @property
    def v0(self):
        return float(sum(abs(v) for v in self.potentials))

    def potential(self, d):
        if 1 <= d <= self.range:
            return self.potentials[d - 1]
        return 0.0


@dataclass(frozen=True, eq=False)
class CnnWeights:
    """
    A two-layer ReLU network: input x = n - input_center + input_shift, one
    channel in; layer 1 kernel (n_offsets1, channels, 1) over offsets1;
    layer 2 kernel (n_offsets2, 1, channels) over offsets2; output
    readout * sum_i ReLU(layer 2).
    """
    offsets1: list
    kernel1: np.ndarray
    bias1: np.ndarray
    offsets2: list
    kernel2: np.ndarray
    bias2: np.ndarray
    readout: float = 1.0
    input_center: float = 0.0
    input_shift: float = 0.0
    min_linear_size: int = 2
    name: str = field(default="cnn")

    def _conv(self, geometry, h, offsets, kernel, bias):
        shift = geometry.shift_table(offsets)
        return np.einsum('bkic,kmc->bim', h[:, shift, :], kernel,
                         optimize=True) + bias

    def evaluate(self, geometry, configs):
        if geometry.L < self.min_linear_size:
            raise LatticeError("{} needs L >= {}".format(
                self.name, self.min_linear_size))
        batch, single = config_batch(configs)
        x = (batch - self.input_center + self.input_shift)[:, :, None]
        h = relu(self._conv(geometry, x, self.offsets1, self.kernel1,
                            self.bias1))
        out = relu(self._conv(geometry, h, self.offsets2, self.kernel2,
                              self.bias2))
        value = self.readout * out.sum(axis=(1, 2))
        if single:
            return float(value[0])
        return value

    def to_dict(self):
        return {"name": self.name,
                "layer1": {"offsets": [list(v) for v in self.offsets1],
                           "kernel": self.kernel1.tolist(),
                           "bias": self.bias1.tolist()},
                "layer2": {"offsets": [list(v) for v in self.offsets2],
                           "kernel": self.kernel2.tolist(),
                           "bias": self.bias2.tolist()},
                "readout": self.readout,
                "input_center": self.input_center,
                "input_shift": self.input_shift}


def gutzwiller_direct(patch, geometry, n):
    """
    Description: g * sum_i prod_v 1[n_{T_v(i)} - center = x_v].
    Return Values:
    -On Success:    float, or an array for a batch of configurations
    """
    batch, single = config_batch(n)
    shift = geometry.shift_table(patch.offsets)
    values = batch[:, shift] - patch.center
    targets = np.asarray(patch.targets)[None, :, None]
    matches = np.all(values == targets, axis=1).sum(axis=1)
    out = patch.strength * matches
    if single:
        return float(out[0])
    return out.astype(np.float64)


def build_gutzwiller_cnn(patch):
    """
    Description: Layer 1 gives each offset v a channel pair
    ReLU(+-(x_{T_v(i)} / y_v - 1)), y_v = x_v + xi, which sums to
    |x - y_v| / |y_v| and vanishes only on a match. Layer 2 computes
    ReLU(|g| - 2 |g| Delta x * sum of all layer-1 channels), |g| on a full
    match and 0 otherwise, the readout restores the sign of g. With a
    single offset these are the textbook weights.
    """
    y = patch.shifted_targets
    n_off = len(patch.offsets)
    kernel1 = np.zeros((n_off, 2 * n_off, 1))
    bias1 = np.zeros(2 * n_off)
    for k in range(n_off):
        for mu in (0, 1):
            kernel1[k, 2 * k + mu, 0] = (-1.0) ** mu / y[k]
            bias1[2 * k + mu] = (-1.0) ** (mu + 1)
    g = abs(patch.strength)
    kernel2 = np.full((1, 1, 2 * n_off), -2.0 * g * patch.shift)
    return CnnWeights(offsets1=list(patch.offsets), kernel1=kernel1,
                      bias1=bias1, offsets2=[(0,) * patch.ndim],
                      kernel2=kernel2, bias2=np.array([g]),
                      readout=float(np.sign(patch.strength)),
                      input_center=patch.center,
                      input_shift=patch.input_shift, name="gutzwiller")


def _holes_and_doublons(geometry, n):
    batch, single = config_batch(n)
    if batch.shape[1] != geometry.n_sites:
        raise ConfigurationError("configuration of {} sites on a lattice of "
                                 "{}".format(batch.shape[1],
                                             geometry.n_sites))
    if np.any(batch > 2) or np.any(batch < 0):
        raise ConfigurationError("holon-doublon correlators need occupations "
                                 "in {0, 1, 2}")
    return (batch == 0).astype(np.float64), (batch == 2).astype(np.float64), \
        single


def confinement_direct(spec, geometry, n):
    """
    Description: -sum_ij V_{d_ij} 1[n_i = 0] 1[n_j = 2] over pairs with
    0 < d_ij <= R.
    Return Values:
    -On Success:    float, or an array for a batch
    -On Failure:    ConfigurationError for occupations above 2
    """
    holes, doublons, single = _holes_and_doublons(geometry, n)
    d = geometry.distance_table
    V = np.array([spec.potential(int(k)) for k in range(d.max() + 1)])
    out = -np.einsum('bi,ij,bj->b', holes, V[d], doublons, optimize=True)
    if single:
        return float(out[0])
    return out


def _l1_ball(radius, ndim):
    r = range(-radius, radius + 1)
    return [v for v in itertools.product(r, repeat=ndim)
            if sum(abs(c) for c in v) <= radius]


def build_confinement_cnn(spec, ndim=2):
    """
    Description: Layer 1 (input n - 1) has a hole channel ReLU(-x_i), a
    doublon channel ReLU(x_i) and one ring channel per distance d,
    ReLU(sum of x over the L1 ring at distance d). Layer 2 is
    ReLU(V0 hole - V0 doublon - sum_d V_d ring_d - V0): at a hole it is
    sum_d |V_d| ring_d, elsewhere the gate stays closed while every ring
    holds at most one net doublon.
    """
    R = spec.range
    offsets = _l1_ball(R, ndim)
    origin = offsets.index((0,) * ndim)
    channels = 2 + R
    kernel1 = np.zeros((len(offsets), channels, 1))
    kernel1[origin, 0, 0] = -1.0
    kernel1[origin, 1, 0] = 1.0
    for k, v in enumerate(offsets):
        d = sum(abs(c) for c in v)
        if d > 0:
            kernel1[k, 1 + d, 0] = 1.0
    v0 = spec.v0
    kernel2 = np.zeros((1, 1, channels))
    kernel2[0, 0, 0] = v0
    kernel2[0, 0, 1] = -v0
    kernel2[0, 0, 2:] = [-v for v in spec.potentials]
    return CnnWeights(offsets1=offsets, kernel1=kernel1,
                      bias1=np.zeros(channels), offsets2=[(0,) * ndim],
                      kernel2=kernel2, bias2=np.array([-v0]), readout=1.0,
                      input_center=1.0, min_linear_size=2 * R + 1,
                      name="confinement")


def bound_pair_count(geometry, n):
    """Number of (hole, doublon) pairs at minimum-image distance 1."""
    holes, doublons, single = _holes_and_doublons(geometry, n)
    adjacent = (geometry.distance_table == 1).astype(np.float64)
    out = np.einsum('bi,ij,bj->b', holes, adjacent, doublons, optimize=True)
    if single:
        return float(out[0])
    return out


def mott_projector_direct(geometry, n):
    """
    Pi_h + Pi_d: holes without an adjacent doublon plus doublons without an
    adjacent hole.
    """
    holes, doublons, single = _holes_and_doublons(geometry, n)
    adjacent = (geometry.distance_table == 1).astype(np.float64)
    free_h = holes * (doublons @ adjacent == 0)
    free_d = doublons * (holes @ adjacent == 0)
    out = free_h.sum(axis=1) + free_d.sum(axis=1)
    if single:
        return float(out[0])
    return out

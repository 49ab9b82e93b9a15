# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Ansatz
The backflow-Jastrow wavefunction

    ln psi(n) = sum_ij  nt_i W_{d_ij} nt_j,   nt = x + h^(D) a,

with x_i = n_i / nbar - 1 the rescaled occupations, W indexed by the
minimum-image L1 distance and h^(D) the output of a periodic convolutional
ResNet. Depth 0 is the bare two-body Jastrow. The optional ideal-condensate
prior adds 1/2 (ln N! - sum_i ln n_i!).

Network, layer l = 1 .. D (D even):
    ht^(l) = GELU(conv_l(h^(l-1))),     h^(0) = x
    h^(1) = ht^(1)                     (1 -> alpha channels)
    h^(l) = ht^(l)                     l even
    h^(l) = LayerNorm_l(h^(l-2) + ht^(l))   l odd >= 3

Flat parameter order:
    jastrow | conv1.kernel | conv1.bias | ... | convD.bias |
    norm3.gain | norm3.offset | ... | mixing
Kernels have shape (filter sites, out channels, in channels), filter sites
in the order of LatticeGeometry.kernel_offsets.

Gradients are computed by hand-written reverse mode, one row per sample.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ndtr

from bhvmc.base import config
from bhvmc.base.errors import ConfigurationError, LatticeError
from bhvmc.base.helpers import (chunks, config_batch, default_if_none,
                                single_or_batch)

logger = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

# floats held in flight per evaluation chunk
_CHUNK_BUDGET = 2 ** 24


def gelu(x):
    return x * ndtr(x)


def gelu_grad(x):
    return ndtr(x) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class AnsatzSpec:
    """Architecture hyperparameters. depth 0 is the bare Jastrow."""
    depth: int = 0
    channels: int = config.channels
    kernel_radius: int = config.kernel_radius
    use_prior: bool = config.use_prior
    layer_norm_eps: float = config.layer_norm_eps

    def __post_init__(self):
        if self.depth < 0 or self.depth % 2:
            raise ConfigurationError("depth must be an even integer >= 0, "
                                     "got {}".format(self.depth))
        if self.depth and (self.channels < 1 or self.kernel_radius < 0):
            raise ConfigurationError("need channels >= 1, kernel_radius >= 0")

    @property
    def has_backflow(self):
        return self.depth > 0

    @property
    def norm_layers(self):
        return list(range(3, self.depth, 2))


class ParameterLayout(object):
    """Names, shapes and flat offsets of every parameter block."""

    def __init__(self, geometry, spec):
        self.spec = spec
        self.n_offsets = (2 * spec.kernel_radius + 1) ** geometry.ndim
        blocks = [("jastrow", (geometry.n_distance_classes,))]
        alpha = spec.channels
        for layer in range(1, spec.depth + 1):
            c_in = 1 if layer == 1 else alpha
            blocks.append(("conv{}.kernel".format(layer),
                           (self.n_offsets, alpha, c_in)))
            blocks.append(("conv{}.bias".format(layer), (alpha,)))
        for layer in spec.norm_layers:
            blocks.append(("norm{}.gain".format(layer), (alpha,)))
            blocks.append(("norm{}.offset".format(layer), (alpha,)))
        if spec.has_backflow:
            blocks.append(("mixing", (alpha,)))
        self.blocks = blocks
        self.slices = {}
        start = 0
        for name, shape in blocks:
            size = int(np.prod(shape))
            self.slices[name] = slice(start, start + size)
            start += size
        self.size = start
        self.shapes = dict(blocks)

    def mask(self, which="all"):
        """
        Boolean mask over the flat vector: 'all', 'jastrow' or 'backflow'.
        """
        mask = np.zeros(self.size, dtype=bool)
        if which == "all":
            mask[:] = True
        elif which == "jastrow":
            mask[self.slices["jastrow"]] = True
        elif which == "backflow":
            mask[:] = True
            mask[self.slices["jastrow"]] = False
        else:
            raise ValueError("unknown parameter group {!r}".format(which))
        return mask


@dataclass(frozen=True)
class JastrowWeights:
    w: np.ndarray


@dataclass(frozen=True)
class BackflowNetwork:
    depth: int
    channels: int
    kernel_radius: int
    kernels: list
    biases: list
    norm_gains: list
    norm_offsets: list
    mixing: np.ndarray

    @property
    def filter_width(self):
        return 2 * self.kernel_radius + 1


class AnsatzParameters(object):
    """
    All variational parameters as one flat float64 vector. The structured
    views (jastrow, backflow) alias the flat vector.
    """

    def __init__(self, layout, flat=None):
        self.layout = layout
        if flat is None:
            flat = np.zeros(layout.size)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (layout.size,):
            raise ConfigurationError("flat vector of length {} for a layout "
                                     "of {} parameters".format(flat.size,
                                                               layout.size))
        self.flat = flat

    @property
    def spec(self):
        return self.layout.spec

    @property
    def size(self):
        return self.layout.size

    def block(self, name):
        return self.flat[self.layout.slices[name]].reshape(
            self.layout.shapes[name])

    @property
    def jastrow(self):
        return JastrowWeights(self.block("jastrow"))

    @property
    def backflow(self):
        spec = self.spec
        if not spec.has_backflow:
            return None
        layers = range(1, spec.depth + 1)
        return BackflowNetwork(
            depth=spec.depth, channels=spec.channels,
            kernel_radius=spec.kernel_radius,
            kernels=[self.block("conv{}.kernel".format(l)) for l in layers],
            biases=[self.block("conv{}.bias".format(l)) for l in layers],
            norm_gains=[self.block("norm{}.gain".format(l))
                        for l in spec.norm_layers],
            norm_offsets=[self.block("norm{}.offset".format(l))
                          for l in spec.norm_layers],
            mixing=self.block("mixing"))

    def copy(self):
        return AnsatzParameters(self.layout, self.flat.copy())

    def replace(self, flat):
        return AnsatzParameters(self.layout, np.array(flat, dtype=np.float64))

    def to_dict(self):
        """Structured JSON-ready export."""
        spec = self.spec
        return {"depth": spec.depth, "channels": spec.channels,
                "kernel_radius": spec.kernel_radius,
                "use_prior": spec.use_prior,
                "n_parameters": self.size,
                "blocks": {name: self.block(name).tolist()
                           for name, _ in self.layout.blocks}}

    @classmethod
    def from_dict(cls, geometry, data):
        spec = AnsatzSpec(depth=data["depth"], channels=data["channels"],
                          kernel_radius=data["kernel_radius"],
                          use_prior=data.get("use_prior", False))
        params = cls(ParameterLayout(geometry, spec))
        for name, values in data["blocks"].items():
            params.block(name)[...] = np.asarray(values)
        return params


def init_parameters(geometry, spec, rng=None, jastrow=None):
    """
    Kernels ~ N(0, 1/fan_in), biases 0, LayerNorm gain 1 and offset 0,
    mixing weights 0 (the network starts as the bare Jastrow), Jastrow
    weights copied from `jastrow` when given, zero otherwise.
    """
    rng = default_if_none(rng, np.random.default_rng(config.init_seed))
    params = AnsatzParameters(ParameterLayout(geometry, spec))
    if jastrow is not None:
        params.block("jastrow")[...] = np.asarray(
            getattr(jastrow, "w", jastrow))
    net = params.backflow
    if net is not None:
        for kernel in net.kernels:
            fan_in = kernel.shape[0] * kernel.shape[2]
            kernel[...] = rng.normal(0.0, fan_in ** -0.5, size=kernel.shape)
        for gain in net.norm_gains:
            gain[...] = 1.0
    return params


class Wavefunction(object):
    """
    Common interface of every amplitude provider: log_psi over batches of
    configurations, log-derivatives, and log-ratios of single hops.
    """
    n_parameters = 0

    def __init__(self, geometry):
        self.geometry = geometry

    def log_psi(self, configs):
        raise NotImplementedError

    def log_psi_and_grad(self, configs):
        raise NotImplementedError

    def log_grad(self, configs):
        return self.log_psi_and_grad(configs)[1]

    def log_ratio_hops(self, configs, src, dst, log_psi=None):
        """
        ln psi(n - e_src + e_dst) - ln psi(n) for every row b and hop
        column h of src/dst (shape (B, H)). Hops out of empty sites give
        -inf.
        """
        batch, _ = config_batch(configs)
        src = np.asarray(src, dtype=np.int64).reshape(len(batch), -1)
        dst = np.asarray(dst, dtype=np.int64).reshape(len(batch), -1)
        if log_psi is None:
            log_psi = self.log_psi(batch)
        B, H = src.shape
        rows = np.repeat(np.arange(B), H)
        hopped = batch[rows].copy()
        s, d = src.ravel(), dst.ravel()
        allowed = hopped[np.arange(B * H), s] > 0
        idx = np.nonzero(allowed)[0]
        hopped[idx, s[idx]] -= 1
        hopped[idx, d[idx]] += 1
        out = np.full(B * H, -np.inf)
        if len(idx):
            out[idx] = self.log_psi(hopped[idx]) - log_psi[rows[idx]]
        return out.reshape(B, H)


def rescale_input(n, mean_density):
    """
    Description: n_i / nbar - 1, elementwise.
    """
    if not mean_density > 0:
        raise ConfigurationError("mean density must be positive, got {}"
                                 "".format(mean_density))
    return np.asarray(n, dtype=np.float64) / mean_density - 1.0


def log_psi_mf_prior(n):
    """
    Description: ln of the ideal-condensate amplitude up to a constant,
    1/2 (ln N! - sum_i ln n_i!). Works row-wise on batches.
    """
    arr = np.asarray(n, dtype=np.float64)
    total = arr.sum(axis=-1)
    return 0.5 * (gammaln(total + 1.0) - gammaln(arr + 1.0).sum(axis=-1))


class BackflowJastrow(Wavefunction):
    """
    The backflow-Jastrow wavefunction on a periodic geometry, evaluated on
    batches of configurations.
    """

    def __init__(self, geometry, params):
        super().__init__(geometry)
        if not geometry.periodic:
            raise LatticeError("the ansatz needs a periodic geometry")
        self.params = params
        self.spec = params.spec
        self.n_parameters = params.size
        translations = geometry.all_translations()
        self._transl = geometry.shift_table(translations)
        self._rclass = geometry.distance_index[0]
        if self.spec.has_backflow:
            offsets = geometry.kernel_offsets(self.spec.kernel_radius)
            self._shift = geometry.shift_table(offsets)
            self._unshift = np.argsort(self._shift, axis=1)

    def with_params(self, params):
        return BackflowJastrow(self.geometry, params)

    @property
    def weight_matrix(self):
        return self.params.jastrow.w[self.geometry.distance_index]

    def _chunk_size(self):
        n = self.geometry.n_sites
        per_row = n * n
        if self.spec.has_backflow:
            per_row += 4 * self.spec.depth * n * self.spec.channels * \
                (2 * self.spec.kernel_radius + 1) ** self.geometry.ndim
        return max(1, _CHUNK_BUDGET // per_row)

    # forward / backward of the network

    def _conv(self, h, kernel, bias):
        gathered = h[:, self._shift, :]
        return np.einsum('bkic,kmc->bim', gathered, kernel,
                         optimize=True) + bias

    def _conv_back(self, h, kernel, dpre, need_input):
        gathered = h[:, self._shift, :]
        dkernel = np.einsum('bkic,bim->bkmc', gathered, dpre, optimize=True)
        dbias = dpre.sum(axis=1)
        if not need_input:
            return dkernel, dbias, None
        dgathered = np.einsum('bim,kmc->bkic', dpre, kernel, optimize=True)
        dh = np.zeros_like(h)
        for k in range(self._shift.shape[0]):
            dh += dgathered[:, k][:, self._unshift[k], :]
        return dkernel, dbias, dh

    def _layer_norm(self, z, gain, offset):
        mu = z.mean(axis=-1, keepdims=True)
        centered = z - mu
        var = (centered ** 2).mean(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.spec.layer_norm_eps)
        zhat = centered * inv
        return zhat * gain + offset, (zhat, inv)

    @staticmethod
    def _layer_norm_back(dout, gain, cache):
        zhat, inv = cache
        dzhat = dout * gain
        dz = inv * (dzhat - dzhat.mean(axis=-1, keepdims=True)
                    - zhat * (dzhat * zhat).mean(axis=-1, keepdims=True))
        return dz, (dout * zhat).sum(axis=1), dout.sum(axis=1)

    def _network(self, x):
        """Forward pass, returns h^(D) and the tape for backprop."""
        net = self.params.backflow
        norms = {l: k for k, l in enumerate(self.spec.norm_layers)}
        hs = {0: x[:, :, None]}
        tape = {}
        for layer in range(1, self.spec.depth + 1):
            pre = self._conv(hs[layer - 1], net.kernels[layer - 1],
                             net.biases[layer - 1])
            act = gelu(pre)
            if layer >= 3 and layer % 2:
                k = norms[layer]
                out, cache = self._layer_norm(hs[layer - 2] + act,
                                              net.norm_gains[k],
                                              net.norm_offsets[k])
                tape[layer] = (pre, cache)
            else:
                out = act
                tape[layer] = (pre, None)
            hs[layer] = out
        return hs, tape

    def _network_back(self, hs, tape, dh_top, grads):
        net = self.params.backflow
        layout = self.params.layout
        norms = {l: k for k, l in enumerate(self.spec.norm_layers)}
        B = dh_top.shape[0]
        dh = {self.spec.depth: dh_top}
        for layer in range(self.spec.depth, 0, -1):
            pre, cache = tape[layer]
            d = dh.pop(layer)
            if cache is not None:
                k = norms[layer]
                d, dgain, doffset = self._layer_norm_back(
                    d, net.norm_gains[k], cache)
                grads[:, layout.slices["norm{}.gain".format(layer)]] = dgain
                grads[:, layout.slices["norm{}.offset".format(layer)]] = \
                    doffset
                dh[layer - 2] = dh.get(layer - 2, 0.0) + d
            dpre = d * gelu_grad(pre)
            dkernel, dbias, dinput = self._conv_back(
                hs[layer - 1], net.kernels[layer - 1], dpre, layer > 1)
            grads[:, layout.slices["conv{}.kernel".format(layer)]] = \
                dkernel.reshape(B, -1)
            grads[:, layout.slices["conv{}.bias".format(layer)]] = dbias
            if dinput is not None:
                dh[layer - 1] = dh.get(layer - 1, 0.0) + dinput

    # public evaluation

    def _inputs(self, batch):
        density = batch.sum(axis=1, keepdims=True) / self.geometry.n_sites
        if np.any(density <= 0):
            raise ConfigurationError("configurations without particles")
        return batch / density - 1.0

    def _features(self, x):
        if not self.spec.has_backflow:
            return x, None, None
        hs, tape = self._network(x)
        return x + hs[self.spec.depth] @ self.params.backflow.mixing, hs, \
            tape

    def _correlations(self, xt):
        """C[b, r] = sum_i xt_i xt_{T_r(i)}."""
        return np.einsum('bi,bri->br', xt, xt[:, self._transl],
                         optimize=True)

    @single_or_batch
    def backflow_features(self, configs):
        out = np.empty(configs.shape, dtype=np.float64)
        for sl in chunks(len(configs), self._chunk_size()):
            out[sl] = self._features(self._inputs(configs[sl]))[0]
        return out

    @single_or_batch
    def log_psi(self, configs):
        out = np.empty(len(configs))
        w_r = self.params.jastrow.w[self._rclass]
        for sl in chunks(len(configs), self._chunk_size()):
            xt = self._features(self._inputs(configs[sl]))[0]
            out[sl] = self._correlations(xt) @ w_r
        if self.spec.use_prior:
            out += log_psi_mf_prior(configs)
        return out

    def log_psi_and_grad(self, configs):
        batch, single = config_batch(configs)
        B = len(batch)
        layout = self.params.layout
        w = self.params.jastrow.w
        w_r = w[self._rclass]
        wmat = self.weight_matrix
        onehot = np.zeros((len(self._rclass), len(w)))
        onehot[np.arange(len(self._rclass)), self._rclass] = 1.0
        logpsi = np.empty(B)
        grads = np.zeros((B, layout.size))
        for sl in chunks(B, self._chunk_size()):
            x = self._inputs(batch[sl])
            xt, hs, tape = self._features(x)
            corr = self._correlations(xt)
            logpsi[sl] = corr @ w_r
            g = grads[sl]
            g[:, layout.slices["jastrow"]] = corr @ onehot
            if self.spec.has_backflow:
                dxt = 2.0 * xt @ wmat
                top = hs[self.spec.depth]
                g[:, layout.slices["mixing"]] = np.einsum('bim,bi->bm', top,
                                                          dxt)
                dh_top = dxt[:, :, None] * self.params.backflow.mixing
                self._network_back(hs, tape, dh_top, g)
        if self.spec.use_prior:
            logpsi += log_psi_mf_prior(batch)
        if single:
            return logpsi[0], grads[0]
        return logpsi, grads

    def log_ratio_hops(self, configs, src, dst, log_psi=None):
        if self.spec.has_backflow:
            return super().log_ratio_hops(configs, src, dst, log_psi)
        batch, _ = config_batch(configs)
        B = len(batch)
        src = np.asarray(src, dtype=np.int64).reshape(B, -1)
        dst = np.asarray(dst, dtype=np.int64).reshape(B, -1)
        wmat = self.weight_matrix
        density = batch.sum(axis=1, keepdims=True) / self.geometry.n_sites
        rows = np.arange(B)[:, None]
        out = np.empty(src.shape)
        for sl in chunks(B, self._chunk_size()):
            field = self._inputs(batch[sl]) @ wmat
            s, d = src[sl], dst[sl]
            nb = density[sl]
            r = rows[:len(s)]
            out[sl] = (2.0 / nb) * (field[r, d] - field[r, s]) + \
                2.0 * (wmat[s, s] - wmat[d, s]) / nb ** 2
        n_src = np.take_along_axis(batch, src, axis=1)
        n_dst = np.take_along_axis(batch, dst, axis=1)
        if self.spec.use_prior:
            with np.errstate(divide="ignore"):
                out += 0.5 * (np.log(n_src) - np.log(n_dst + 1.0))
        out[n_src < 1] = -np.inf
        return out

    def __repr__(self):
        return "BackflowJastrow(D={}, alpha={}, d_K={}, params={})".format(
            self.spec.depth, self.spec.channels, self.spec.kernel_radius,
            self.n_parameters)


def bare_jastrow(geometry, w=None, use_prior=False):
    """Depth-0 wavefunction with Jastrow weights w (zeros by default)."""
    spec = AnsatzSpec(depth=0, use_prior=use_prior)
    return BackflowJastrow(geometry, init_parameters(geometry, spec,
                                                     jastrow=w))


def backflow_features(params, geometry, n):
    """
    Description: nt_i = x_i + sum_mu a_mu h^(D)_{i, mu}, with x the rescaled
    occupations. Requires a network of depth >= 2.
    """
    if not params.spec.has_backflow:
        raise ConfigurationError("parameters carry no backflow network")
    return BackflowJastrow(geometry, params).backflow_features(n)


def log_psi(params, geometry, n):
    """
    Description: ln psi(n) of the backflow-Jastrow (or bare Jastrow when the
    parameters have depth 0).
    """
    return BackflowJastrow(geometry, params).log_psi(n)


def log_grad(params, geometry, n):
    """
    Description: d ln psi / d theta in flat-vector order.
    """
    return BackflowJastrow(geometry, params).log_grad(n)

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Hamiltonian
The Bose-Hubbard model

    H = -J sum_<ij> (a_i^+ a_j + a_j^+ a_i) + U/2 sum_i n_i (n_i - 1)

on a LatticeGeometry: local energies, the one-body density matrix and the
condensate fraction estimated from wavefunction ratios, and the mean-field
reference energy. TableAnsatz serves explicit amplitudes over a fixed-N
basis, so every ratio estimator can be checked against exact numbers.
"""
import logging
from dataclasses import dataclass

import numpy as np

from bhvmc.api.ansatz import Wavefunction
from bhvmc.api.stats import statistics
from bhvmc.base.errors import AmplitudeError, ConfigurationError
from bhvmc.base.helpers import chunks, config_batch, single_or_batch

logger = logging.getLogger(__name__)

_HOP_BUDGET = 2 ** 22


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Hopping J and repulsion U on a geometry. J = 0 is accepted for the
    atomic limit, energies are otherwise quoted in units of J.
    """
    J: float
    U: float
    geometry: object

    def __post_init__(self):
        if self.J < 0 or self.U < 0:
            raise ConfigurationError("need J >= 0 and U >= 0, got J={}, U={}"
                                     "".format(self.J, self.U))

    @property
    def n_sites(self):
        return self.geometry.n_sites

    def directed_hops(self):
        """(src, dst) of both directions of every bond, each bond once."""
        bonds = self.geometry.bonds
        src = np.concatenate([bonds[:, 0], bonds[:, 1]])
        dst = np.concatenate([bonds[:, 1], bonds[:, 0]])
        return src, dst

    def diagonal(self, configs):
        batch, _ = config_batch(configs)
        return 0.5 * self.U * np.sum(batch * (batch - 1), axis=1)


class TableAnsatz(Wavefunction):
    """
    Amplitudes looked up in an explicit non-negative vector over a FockBasis.
    Configurations outside the basis (or with zero amplitude) have
    ln psi = -inf.
    """

    def __init__(self, geometry, basis, amplitudes):
        super().__init__(geometry)
        amps = np.asarray(amplitudes, dtype=np.float64)
        if amps.shape != (basis.dim,):
            raise ConfigurationError("need {} amplitudes, got {}"
                                     "".format(basis.dim, amps.shape))
        if np.any(amps < 0):
            raise ConfigurationError("table amplitudes must be non-negative")
        self.basis = basis
        self.amplitudes = amps
        with np.errstate(divide="ignore"):
            self._log = np.log(amps)

    @classmethod
    def from_log_amplitudes(cls, geometry, basis, log_amplitudes):
        la = np.asarray(log_amplitudes, dtype=np.float64)
        return cls(geometry, basis, np.exp(la - la.max()))

    @classmethod
    def from_wavefunction(cls, wavefunction, basis):
        return cls.from_log_amplitudes(wavefunction.geometry, basis,
                                       wavefunction.log_psi(basis.configs))

    @single_or_batch
    def log_psi(self, configs):
        idx = self.basis.index(configs)
        out = np.full(len(configs), -np.inf)
        ok = idx >= 0
        out[ok] = self._log[idx[ok]]
        return out

    def log_psi_and_grad(self, configs):
        batch, single = config_batch(configs)
        lp = self.log_psi(batch)
        grads = np.zeros((len(batch), 0))
        if single:
            return lp[0], grads[0]
        return lp, grads

    def log_ratio_hops(self, configs, src, dst, log_psi=None):
        ratio = super().log_ratio_hops(configs, src, dst, log_psi)
        # -inf - (-inf) only happens off-support, where no ratio is defined
        return np.where(np.isnan(ratio), -np.inf, ratio)


def _wavefunction(ansatz, params):
    if params is not None:
        return ansatz.with_params(params)
    return ansatz


def local_energy(model, ansatz, params, configs):
    """
    Description: E_loc(n) = <n|H|psi> / <n|psi> for one configuration or a
    batch. params None evaluates the ansatz as it is. Hops out of empty
    sites contribute nothing.
    Return Values:
    -On Success:    float, or an array for a batch
    -On Failure:    AmplitudeError when a ratio is +inf or nan
    """
    wf = _wavefunction(ansatz, params)
    batch, single = config_batch(configs)
    src, dst = model.directed_hops()
    H = len(src)
    out = model.diagonal(batch)
    if H and model.J != 0:
        size = max(1, _HOP_BUDGET // max(H * batch.shape[1], 1))
        for sl in chunks(len(batch), size):
            part = batch[sl]
            B = len(part)
            s = np.broadcast_to(src, (B, H))
            d = np.broadcast_to(dst, (B, H))
            logr = wf.log_ratio_hops(part, s, d)
            if np.any(np.isnan(logr)) or np.any(logr == np.inf):
                raise AmplitudeError("non-finite log-amplitude difference in "
                                     "the local energy")
            n_s = np.take_along_axis(part, s, axis=1)
            n_d = np.take_along_axis(part, d, axis=1)
            amp = np.sqrt(n_s * (n_d + 1.0))
            out[sl] -= model.J * np.sum(amp * np.exp(logr), axis=1)
    if single:
        return float(out[0])
    return out


def _samples(samples):
    """(configs, weights, n_chains) of a SampleBatch or a bare array."""
    configs = getattr(samples, "configs", samples)
    batch, _ = config_batch(configs)
    return (batch, getattr(samples, "weights", None),
            getattr(samples, "n_chains", 1))


def _chain_view(values, n_chains):
    n = len(values)
    if n_chains > 1 and n % n_chains == 0:
        return values.reshape(n_chains, n // n_chains)
    return values


def _thin(configs, n_chains, max_samples):
    """Evenly spaced rows of every chain, at most max_samples in total."""
    n = len(configs)
    if n_chains < 1 or n % n_chains or max_samples < n_chains:
        n_chains = 1
    per = n // n_chains
    keep = max(max_samples // n_chains, 1)
    idx = np.linspace(0, per, keep, endpoint=False).astype(np.int64)
    rows = (np.arange(n_chains)[:, None] * per + idx[None, :]).ravel()
    return configs[rows], n_chains


@dataclass(frozen=True)
class DensityMatrixEstimate:
    """
    <a_i^+ a_j> estimated per translation class. matrix/errors are the full
    n_sites x n_sites arrays rebuilt from the per-displacement estimates.
    """
    displacements: list
    matrix: np.ndarray
    errors: np.ndarray
    rho0: object

    @property
    def condensate_fraction(self):
        return self.rho0.mean


def one_body_density_matrix(model, ansatz, params, samples,
                            max_samples=None):
    """
    Description: Translation-averaged Monte Carlo estimate of <a_i^+ a_j>
    from samples of |psi|^2,

        C(r) = 1/n_sites sum_i E[ sqrt(n_j (n_i + 1)) psi(n - e_j + e_i)
                                  / psi(n) ],    j = T_r(i).

    The diagonal is E[n_i]. max_samples thins every chain to evenly spaced
    samples (the estimator evaluates n_sites**2 ratios per sample).
    Return Values:
    -On Success:    a DensityMatrixEstimate, rho0 included
    """
    wf = _wavefunction(ansatz, params)
    geometry = model.geometry
    configs, weights, n_chains = _samples(samples)
    if max_samples is not None and max_samples < len(configs):
        configs, n_chains = _thin(configs, n_chains, max_samples)
        weights = None
    n = geometry.n_sites
    transl = geometry.shift_table(geometry.all_translations())
    # displacement r moves a boson from j = T_r(i) to i
    dst = np.tile(np.arange(n), n - 1)
    src = transl[1:].ravel()
    H = len(src)
    per_sample = np.empty((len(configs), n))
    per_sample[:, 0] = configs.sum(axis=1) / n
    size = max(1, _HOP_BUDGET // max(H * n, 1))
    for sl in chunks(len(configs), size):
        part = configs[sl]
        B = len(part)
        s = np.broadcast_to(src, (B, H))
        d = np.broadcast_to(dst, (B, H))
        logr = wf.log_ratio_hops(part, s, d)
        if np.any(np.isnan(logr)) or np.any(logr == np.inf):
            raise AmplitudeError("non-finite ratio in the density matrix")
        n_s = np.take_along_axis(part, s, axis=1)
        n_d = np.take_along_axis(part, d, axis=1)
        terms = np.sqrt(n_s * (n_d + 1.0)) * np.exp(logr)
        per_sample[sl, 1:] = terms.reshape(B, n - 1, n).mean(axis=2)
    estimates = [statistics(_chain_view(per_sample[:, r], n_chains), weights)
                 for r in range(n)]
    rho0 = statistics(_chain_view(per_sample.sum(axis=1) / n, n_chains),
                      weights)
    disp = geometry.displacement_table()
    means = np.array([e.mean for e in estimates])
    errs = np.array([e.error for e in estimates])
    return DensityMatrixEstimate(
        displacements=estimates, matrix=means[disp], errors=errs[disp],
        rho0=rho0)


def condensate_fraction(obdm, L=None):
    """
    Description: rho0 = sum_ij <a_i^+ a_j> / L**4. Without L the
    denominator is n_sites**2 (identical on L x L lattices, the convention
    used for chains).
    """
    matrix = getattr(obdm, "matrix", obdm)
    matrix = np.asarray(matrix, dtype=np.float64)
    denom = float(L) ** 4 if L is not None else float(matrix.shape[0]) ** 2
    return float(matrix.sum() / denom)


def mean_field_energy(U, J, nbar, z, n_sites=None):
    """
    Description: E_MF / n_sites = nbar (U nbar / 2 - z J).
    Return Values:
    -On Success:    the per-site value, or the total when n_sites is given
    """
    per_site = nbar * (U * nbar / 2.0 - z * J)
    if n_sites is None:
        return per_site
    return per_site * n_sites

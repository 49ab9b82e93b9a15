# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Oracle
Exact diagonalization of small fixed-N Bose-Hubbard systems: the sparse
Hamiltonian over the enumerated basis, its ground pair, exact observables,
exact Renyi-2 entropies and exact Born-weighted sample batches.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from bhvmc.api.fock import FockBasis
from bhvmc.api.hamiltonian import ModelParams, TableAnsatz, \
    condensate_fraction, local_energy
from bhvmc.api.sampler import SampleBatch
from bhvmc.base import config
from bhvmc.base.errors import DimensionError, SolverError
from bhvmc.base.helpers import default_if_none

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EdResult:
    """
    Ground pair of H over `basis`. ground_vector is normalized, its largest
    component positive.
    """
    basis: FockBasis
    ground_energy: float
    ground_vector: np.ndarray
    hamiltonian: object
    residual: float
    method: str

    @property
    def dimension(self):
        return self.basis.dim

    def table_ansatz(self, geometry):
        """The ground state served as a TableAnsatz."""
        return TableAnsatz(geometry, self.basis, np.abs(self.ground_vector))


def build_hamiltonian_matrix(geometry, N, J, U, basis=None, max_nnz=None):
    """
    Description: H over the fixed-N basis (descending lexicographic order):
    diagonal U/2 sum_i n_i (n_i - 1), off-diagonal -J sqrt(n_j (n_i + 1))
    for every directed bond hop j -> i.
    Return Values:
    -On Success:    a scipy.sparse CSR matrix
    -On Failure:    DimensionError when the basis or the nonzero estimate
                    exceeds its guard
    """
    if basis is None:
        basis = FockBasis(geometry.n_sites, N)
    max_nnz = default_if_none(max_nnz, config.ed_max_nnz)
    model = ModelParams(J=J, U=U, geometry=geometry)
    src, dst = model.directed_hops()
    nnz_bound = basis.dim * (1 + len(src))
    if nnz_bound > max_nnz:
        raise DimensionError("Hamiltonian may hold {} nonzeros, guard is {}"
                             "".format(nnz_bound, max_nnz))
    configs = basis.configs
    rows = [np.arange(basis.dim)]
    cols = [np.arange(basis.dim)]
    vals = [model.diagonal(configs)]
    if J != 0:
        for s, d in zip(src, dst):
            occupied = np.nonzero(configs[:, s] > 0)[0]
            if not len(occupied):
                continue
            moved = configs[occupied].copy()
            amp = np.sqrt(moved[:, s] * (moved[:, d] + 1.0))
            moved[:, s] -= 1
            moved[:, d] += 1
            rows.append(basis.index(moved))
            cols.append(occupied)
            vals.append(-J * amp)
    H = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(basis.dim, basis.dim)).tocsr()
    H.sum_duplicates()
    logger.info("built H: %d sites, N=%d, dim=%d, nnz=%d", geometry.n_sites,
                N, basis.dim, H.nnz)
    return H


def ground_state(matrix, basis=None, dense_max_dim=None, residual_tol=None):
    """
    Description: Lowest eigenpair, dense for small matrices and Lanczos
    (ARPACK, smallest algebraic) above ed_dense_max_dim.
    Return Values:
    -On Success:    an EdResult
    -On Failure:    SolverError on Lanczos failure or a residual above
                    residual_tol
    """
    dense_max_dim = default_if_none(dense_max_dim, config.ed_dense_max_dim)
    residual_tol = default_if_none(residual_tol, config.ed_residual_tol)
    dim = matrix.shape[0]
    if basis is None:
        basis = _MatrixBasis(dim)
    if dim <= dense_max_dim:
        dense = matrix.toarray() if sp.issparse(matrix) else \
            np.asarray(matrix, dtype=np.float64)
        values, vectors = scipy.linalg.eigh(dense, subset_by_index=[0, 0])
        method = "dense"
    else:
        try:
            values, vectors = spl.eigsh(matrix, k=1, which="SA", tol=0)
        except spl.ArpackNoConvergence as exc:
            raise SolverError("Lanczos did not converge: {}".format(exc))
        method = "lanczos"
    energy = float(values[0])
    vector = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    if vector[np.argmax(np.abs(vector))] < 0:
        vector = -vector
    residual = float(np.linalg.norm(matrix @ vector - energy * vector))
    if residual > residual_tol:
        raise SolverError("ground-state residual {:.3e} above {:.1e}"
                          "".format(residual, residual_tol), residual)
    logger.info("ground state (%s, dim %d): E0 = %.12f, residual %.1e",
                method, dim, energy, residual)
    return EdResult(basis=basis, ground_energy=energy, ground_vector=vector,
                    hamiltonian=matrix, residual=residual, method=method)


class _MatrixBasis(object):
    """Stand-in when ground_state is called on a bare matrix."""

    def __init__(self, dim):
        self.dim = dim


def solve(geometry, N, J, U):
    """Builds the basis and H and returns the ground state."""
    basis = FockBasis(geometry.n_sites, N)
    H = build_hamiltonian_matrix(geometry, N, J, U, basis=basis)
    return ground_state(H, basis=basis)


def exact_renyi2(ed, partition, max_dim=None):
    """
    Description: S_2 = -ln Tr rho_A**2 of the ground state. rho_A = M M^T,
    with M[a, b] the amplitude of the basis state whose restriction to A is
    pattern a and to the complement is pattern b.
    Return Values:
    -On Success:    a non-negative float
    -On Failure:    DimensionError when the A-subsystem basis is too large
    """
    max_dim = default_if_none(max_dim, config.subsystem_max_dim)
    basis = ed.basis
    sites = np.unique(np.asarray(list(partition), dtype=np.int64))
    if np.any((sites < 0) | (sites >= basis.n_sites)):
        raise ValueError("partition {} outside {} sites".format(
            sites.tolist(), basis.n_sites))
    if len(sites) in (0, basis.n_sites):
        return 0.0
    sub_dim = math.comb(basis.N + len(sites), len(sites))
    if sub_dim > max_dim:
        raise DimensionError("A-subsystem basis of dimension {} exceeds {}"
                             "".format(sub_dim, max_dim))
    rest = np.setdiff1d(np.arange(basis.n_sites), sites)
    _, ia = np.unique(basis.configs[:, sites], axis=0, return_inverse=True)
    _, ib = np.unique(basis.configs[:, rest], axis=0, return_inverse=True)
    M = sp.coo_matrix((ed.ground_vector, (ia.ravel(), ib.ravel()))).tocsr()
    rho = (M @ M.T).tocsr()
    purity = float(rho.multiply(rho).sum())
    return float(-math.log(purity))


@dataclass(frozen=True)
class ExactObservables:
    obdm: np.ndarray
    condensate_fraction: float
    energy: float
    energy_variance: float
    density: np.ndarray

    def to_dict(self):
        return {"obdm": self.obdm.tolist(),
                "condensate_fraction": self.condensate_fraction,
                "energy": self.energy,
                "energy_variance": self.energy_variance,
                "density": self.density.tolist()}


def exact_obdm(basis, vector):
    """<a_i^+ a_j> = sum_n psi(n - e_j + e_i) psi(n) sqrt(n_j (n_i + 1))."""
    configs = basis.configs
    n = basis.n_sites
    p = vector * vector
    obdm = np.empty((n, n))
    obdm[np.diag_indices(n)] = p @ configs
    for j in range(n):
        occupied = np.nonzero(configs[:, j] > 0)[0]
        for i in range(n):
            if i == j:
                continue
            moved = configs[occupied].copy()
            amp = np.sqrt(moved[:, j] * (moved[:, i] + 1.0))
            moved[:, j] -= 1
            moved[:, i] += 1
            obdm[i, j] = np.sum(vector[basis.index(moved)] *
                                vector[occupied] * amp)
    return obdm


def exact_observables(ed, L=None):
    """
    Description: Exact one-body density matrix, condensate fraction (sum
    over the matrix divided by L**4, or n_sites**2 without L), energy and
    energy variance <H^2> - <H>^2 of the ground vector.
    """
    v = ed.ground_vector
    Hv = ed.hamiltonian @ v
    energy = float(v @ Hv)
    # ||(H - <H>) v||**2 equals <H^2> - <H>^2 without the cancellation
    variance = float(np.sum((Hv - energy * v) ** 2))
    obdm = exact_obdm(ed.basis, v)
    return ExactObservables(obdm=obdm,
                            condensate_fraction=condensate_fraction(obdm, L),
                            energy=energy, energy_variance=variance,
                            density=np.diag(obdm).copy())


def exact_sample_batch(wavefunction, basis, model=None, with_grads=True):
    """
    Description: The whole basis as a SampleBatch weighted by the exact Born
    probabilities |psi|**2 / <psi|psi>. Configurations with psi = 0 are
    dropped. Local energies are filled in when a model is given.
    """
    log_psi = wavefunction.log_psi(basis.configs)
    support = np.isfinite(log_psi)
    configs = np.ascontiguousarray(basis.configs[support])
    log_psi = log_psi[support]
    weights = np.exp(2.0 * (log_psi - log_psi.max()))
    weights /= weights.sum()
    grads = None
    if with_grads and getattr(wavefunction, "n_parameters", 0):
        grads = wavefunction.log_grad(configs)
    energies = None
    if model is not None:
        energies = local_energy(model, wavefunction, None, configs)
    return SampleBatch(configs=configs, log_psi=log_psi, weights=weights,
                       local_energies=energies, log_grads=grads)

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Optimizer
Stochastic reconfiguration. From a SampleBatch carrying local energies and
log-derivatives O_k(n):

    S_kk' = E[O_k O_k'] - E[O_k] E[O_k']
    F_k   = E[O_k E_loc] - E[O_k] E[E_loc]
    (S + lambda I) delta = F,   theta <- theta - eta delta

train() runs the staged schedule: Jastrow weights alone first, then every
parameter with the mixing weights starting at zero.
"""
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spl

from bhvmc.api.ansatz import bare_jastrow
from bhvmc.api.estimators import vscore
from bhvmc.api.hamiltonian import local_energy, mean_field_energy
from bhvmc.api.sampler import SampleBatch, run_sampling
from bhvmc.base import config
from bhvmc.base.errors import AmplitudeError, ConfigurationError, \
    EstimatorError, SolverError, TrainingDivergedError
from bhvmc.base.helpers import default_if_none

logger = logging.getLogger(__name__)

__all__ = ["SrConfig", "Stage", "SampleBatch", "SrStepInfo", "TraceRow",
           "TrainResult", "estimate_qgt", "estimate_forces", "sr_step",
           "default_stages", "train"]


@dataclass(frozen=True)
class SrConfig:
    learning_rate: float = config.learning_rate
    diag_shift: float = config.diag_shift_jastrow
    solver: str = "auto"
    cg_tol: float = config.cg_tol
    cg_maxiter: int = config.cg_maxiter
    dense_max_params: int = config.dense_solver_max_params
    divergence_window: int = config.divergence_window
    divergence_factor: float = config.divergence_factor
    log_every: int = config.log_every

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning rate must be positive")
        if self.diag_shift < 0:
            raise ConfigurationError("diagonal shift must be >= 0")
        if self.solver not in ("auto", "dense", "cg"):
            raise ConfigurationError("unknown SR solver {!r}".format(
                self.solver))


@dataclass(frozen=True)
class Stage:
    """steps SR updates restricted to the parameter group `mask`."""
    name: str
    mask: str
    steps: int
    diag_shift: float = None


def default_stages(spec, stage1_steps=None, stage2_steps=None):
    stages = [Stage("jastrow", "jastrow",
                    default_if_none(stage1_steps, config.stage1_steps),
                    config.diag_shift_jastrow)]
    if spec.has_backflow:
        stages.append(Stage("backflow", "all",
                            default_if_none(stage2_steps,
                                            config.stage2_steps),
                            config.diag_shift_backflow))
    return stages


def _centered(batch, values):
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise AmplitudeError("non-finite entries in the sample batch")
    return values - batch.mean(values)


def _weighted(batch, centered):
    if batch.weights is None:
        return centered / len(centered)
    return centered * batch.weights[:, None]


def estimate_qgt(batch, columns=None):
    """
    Description: The quantum geometric tensor from centered log-derivatives,
    symmetric by construction.
    """
    O = batch.log_grads if columns is None else batch.log_grads[:, columns]
    if O is None or not len(O):
        raise ConfigurationError("sample batch carries no log-derivatives")
    Oc = _centered(batch, O)
    S = Oc.T @ _weighted(batch, Oc)
    return 0.5 * (S + S.T)


def estimate_forces(batch, columns=None):
    """
    Description: F_k = Cov(O_k, E_loc) over the batch.
    """
    O = batch.log_grads if columns is None else batch.log_grads[:, columns]
    if O is None or batch.local_energies is None:
        raise ConfigurationError("sample batch needs log-derivatives and "
                                 "local energies")
    Oc = _centered(batch, O)
    Ec = _centered(batch, batch.local_energies)
    return _weighted(batch, Oc).T @ Ec


class QgtOperator(spl.LinearOperator):
    """S + lambda I applied through the centered samples, S never formed."""

    def __init__(self, batch, diag_shift, columns=None):
        O = batch.log_grads if columns is None else \
            batch.log_grads[:, columns]
        self._oc = _centered(batch, O)
        self._ow = _weighted(batch, self._oc)
        self._shift = diag_shift
        n = self._oc.shape[1]
        super().__init__(dtype=np.float64, shape=(n, n))

    def _matvec(self, v):
        v = np.ravel(v)
        return self._ow.T @ (self._oc @ v) + self._shift * v


@dataclass(frozen=True)
class SrStepInfo:
    delta: np.ndarray
    residual: float
    solver: str
    iterations: int = 0


def _solve_dense(S, F, diag_shift):
    A = S + diag_shift * np.eye(len(F))
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError:
        raise SolverError("S + lambda I is singular or indefinite "
                          "(lambda = {})".format(diag_shift),
                          residual=float("inf"))
    delta = scipy.linalg.cho_solve(factor, F)
    return delta, float(np.linalg.norm(A @ delta - F)), 0


def _solve_cg(A, F, tol, maxiter):
    count = [0]

    def tick(_):
        count[0] += 1

    delta, info = spl.cg(A, F, rtol=tol, atol=0.0, maxiter=maxiter,
                         callback=tick)
    residual = float(np.linalg.norm(A @ delta - F))
    if info != 0:
        raise SolverError("conjugate gradient stopped after {} iterations "
                          "(info={})".format(count[0], info), residual)
    return delta, residual, count[0]


def sr_step(params, S, F, sr_config=None, mask=None, diag_shift=None):
    """
    Description: Solves (S + lambda I) delta = F and returns
    theta - eta delta. S is a dense matrix or a LinearOperator already
    holding the shift (QgtOperator). With a mask only the selected entries
    of the flat vector move, the others stay bit-identical.
    Return Values:
    -On Success:    (new AnsatzParameters, SrStepInfo)
    -On Failure:    SolverError with the residual
    """
    cfg = default_if_none(sr_config, SrConfig())
    shift = default_if_none(diag_shift, cfg.diag_shift)
    F = np.asarray(F, dtype=np.float64)
    solver = cfg.solver
    if isinstance(S, spl.LinearOperator):
        solver = "cg"
        A = S
    elif solver == "auto":
        solver = "dense" if len(F) <= cfg.dense_max_params else "cg"
    if solver == "dense":
        delta, residual, iters = _solve_dense(np.asarray(S), F, shift)
    else:
        if not isinstance(S, spl.LinearOperator):
            S = np.asarray(S)
            A = spl.aslinearoperator(S + shift * np.eye(len(F)))
        delta, residual, iters = _solve_cg(A, F, cfg.cg_tol, cfg.cg_maxiter)
    logger.debug("SR solve (%s): residual %.2e", solver, residual)
    flat = params.flat.copy()
    if mask is None:
        flat -= cfg.learning_rate * delta
    else:
        flat[mask] -= cfg.learning_rate * delta
    return params.replace(flat), SrStepInfo(delta, residual, solver, iters)


@dataclass(frozen=True)
class TraceRow:
    step: int
    stage: str
    E_mean: float
    E_err: float
    VarE: float
    vscore: float
    acceptance_rate: float
    wall_time: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class TrainResult:
    params: object
    trace: list = field(default_factory=list)
    chains: np.ndarray = None
    last_batch: SampleBatch = None


class DivergenceGuard(object):
    """
    Raises when the mean energy of the latest window rises above the best
    window seen by more than factor * |E_best| plus three standard errors.
    """

    def __init__(self, window, factor):
        self.window = window
        self.factor = factor
        self.energies = []
        self.best = None

    def update(self, step, energy):
        if not np.isfinite(energy):
            raise TrainingDivergedError("energy became {} at step {}".format(
                energy, step), step)
        self.energies.append(energy)
        if len(self.energies) < self.window or self.window < 2:
            return
        recent = np.asarray(self.energies[-self.window:])
        mean = recent.mean()
        err = recent.std(ddof=1) / np.sqrt(self.window)
        if self.best is None or mean < self.best:
            self.best = mean
        if mean > self.best + self.factor * abs(self.best) + 3.0 * err:
            raise TrainingDivergedError(
                "energy window mean {:.6g} rose above the best {:.6g} at "
                "step {}".format(mean, self.best, step), step)


def stage_wavefunction(ansatz, params, stage):
    """
    Wavefunction evaluated during a stage: the bare Jastrow view while only
    Jastrow weights train and the mixing weights are zero, the full network
    otherwise. Returns (wavefunction, flat columns its gradients cover).
    """
    layout = params.layout
    if stage.mask == "jastrow" and (not params.spec.has_backflow or
                                    not np.any(params.block("mixing"))):
        wf = bare_jastrow(ansatz.geometry, params.block("jastrow").copy(),
                          use_prior=params.spec.use_prior)
        return wf, np.arange(layout.size)[layout.slices["jastrow"]]
    return ansatz.with_params(params), np.nonzero(layout.mask(stage.mask))[0]


def _step_seed(seed, step):
    return int(np.random.SeedSequence([int(seed), int(step)])
               .generate_state(1)[0])


def measure_batch(model, wavefunction, batch):
    """Fills in local energies and log-derivatives of a sampled batch."""
    _, grads = wavefunction.log_psi_and_grad(batch.configs)
    energies = local_energy(model, wavefunction, None, batch.configs)
    return replace(batch, local_energies=energies, log_grads=grads)


def train(model, ansatz, sampler_config, sr_config=None, stages=None,
          init=None, start_step=0, callback=None):
    """
    Description: Staged SR training. Every step samples with a seed derived
    from (sampler seed, step); chains continue from the previous step with
    a short warm burn-in. callback(row, params, chains) runs after every
    update, for trace files and checkpoints. A run resumed at start_step
    with the saved parameters and chains repeats the uninterrupted run.
    Return Values:
    -On Success:    a TrainResult (final parameters, trace rows, chains)
    -On Failure:    TrainingDivergedError from the divergence guard
    """
    cfg = default_if_none(sr_config, SrConfig())
    params = ansatz.params.copy()
    stages = default_if_none(stages, default_stages(params.spec))
    geometry = model.geometry
    chains = np.asarray(init if init is not None else geometry.n_sites)
    N = int(chains.sum(axis=-1).ravel()[0]) if chains.ndim else int(chains)
    e_mf = mean_field_energy(model.U, model.J, N / geometry.n_sites,
                             geometry.z, geometry.n_sites)
    guard = DivergenceGuard(cfg.divergence_window, cfg.divergence_factor)
    result = TrainResult(params=params)
    t0 = time.time()
    step = 0
    for stage in stages:
        shift = default_if_none(stage.diag_shift, cfg.diag_shift)
        for _ in range(stage.steps):
            if step < start_step:
                step += 1
                continue
            wf, columns = stage_wavefunction(ansatz, params, stage)
            burn_in = sampler_config.burn_in_sweeps if chains.ndim < 2 else \
                min(sampler_config.burn_in_sweeps, config.warm_burn_in_sweeps)
            step_config = replace(sampler_config,
                                  seed=_step_seed(sampler_config.seed, step),
                                  burn_in_sweeps=burn_in)
            batch = measure_batch(model, wf,
                                  run_sampling(step_config, wf, chains))
            chains = batch.final_configs
            energy = batch.statistics(batch.local_energies)
            try:
                score = vscore(energy.mean, energy.variance, e_mf,
                               geometry.n_sites)
            except EstimatorError:
                score = float("nan")
            row = TraceRow(step=step, stage=stage.name, E_mean=energy.mean,
                           E_err=energy.error, VarE=energy.variance,
                           vscore=score,
                           acceptance_rate=batch.acceptance_rate,
                           wall_time=time.time() - t0)
            guard.update(step, energy.mean)
            width = batch.log_grads.shape[1]
            grad_cols = slice(None) if len(columns) == width else columns
            F = estimate_forces(batch, grad_cols)
            if len(columns) <= cfg.dense_max_params and cfg.solver != "cg":
                S = estimate_qgt(batch, grad_cols)
            else:
                S = QgtOperator(batch, shift, grad_cols)
            mask = np.zeros(params.size, dtype=bool)
            mask[columns] = True
            params, info = sr_step(params, S, F, cfg, mask=mask,
                                   diag_shift=shift)
            result.trace.append(row)
            if step % max(cfg.log_every, 1) == 0:
                logger.info("step %d [%s]: E = %.6f +/- %.2g, var %.3g, "
                            "acc %.3f, SR residual %.1e", step, stage.name,
                            row.E_mean, row.E_err, row.VarE,
                            row.acceptance_rate, info.residual)
            step += 1
            if callback is not None:
                callback(row, params, chains)
            result.last_batch = batch
    result.params = params
    result.chains = chains if np.ndim(chains) == 2 else None
    return result

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Estimators
Derived diagnostics and analysis fits on top of sampled or exact data:

    vscore                 dimensionless variance score
    renyi2_swap            two-replica swap estimator of S_2
    fit_scaling_function   [softplus_a(J/U - b)]**c fitted per system size
    data_collapse_transform / collapse_quality
    fit_entropy_scaling    S_2 = a L + b ln L + c
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares
from scipy.special import expit

from bhvmc.api.sampler import run_sampling
from bhvmc.api.stats import ObservableEstimate, jackknife
from bhvmc.base import config
from bhvmc.base.errors import EstimatorError, FitError
from bhvmc.base.helpers import config_batch, default_if_none

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VscoreInput:
    energy_total: float
    variance_total: float
    e_mf_total: float
    n_sites: int


def vscore(inp, variance_total=None, e_mf_total=None, n_sites=None):
    """
    Description: n_sites * Var[E] / (E - E_MF)**2, with total energies and
    the variance of the total local energy. Accepts a VscoreInput or the
    four numbers.
    Return Values:
    -On Success:    a non-negative float
    -On Failure:    EstimatorError for a negative variance or E >= E_MF
    """
    if not isinstance(inp, VscoreInput):
        inp = VscoreInput(inp, variance_total, e_mf_total, n_sites)
    if inp.variance_total < 0:
        raise EstimatorError("negative energy variance {}".format(
            inp.variance_total))
    gap = inp.energy_total - inp.e_mf_total
    if not gap < 0:
        raise EstimatorError("energy {} is not below the mean-field energy "
                             "{}".format(inp.energy_total, inp.e_mf_total))
    return float(inp.n_sites * inp.variance_total / gap ** 2)


# Renyi-2

def _swap_ratios(wavefunction, configs_1, lp_1, configs_2, lp_2, sites):
    n_sites = configs_1.shape[1]
    if int(sites.sum()) in (0, n_sites):
        return np.ones(len(configs_1))
    a = configs_2.copy()
    a[:, ~sites] = configs_1[:, ~sites]
    b = configs_1.copy()
    b[:, ~sites] = configs_2[:, ~sites]
    N = configs_1[0].sum()
    conserved = a.sum(axis=1) == N
    ratios = np.zeros(len(configs_1))
    idx = np.nonzero(conserved)[0]
    if len(idx):
        lp_a = wavefunction.log_psi(a[idx])
        lp_b = wavefunction.log_psi(b[idx])
        with np.errstate(invalid="ignore"):
            log_r = (lp_a - lp_2[idx]) + (lp_b - lp_1[idx])
        if np.any(np.isnan(log_r)) or np.any(log_r == np.inf):
            raise EstimatorError("non-finite swap ratio")
        ratios[idx] = np.exp(log_r)
    return ratios


def _site_mask(partition, n_sites):
    sites = np.zeros(n_sites, dtype=bool)
    sites[np.asarray(list(partition), dtype=np.int64)] = True
    return sites


def renyi2_from_batches(wavefunction, partition, batch_1, batch_2,
                        block_size=None):
    """
    Description: -ln E[psi(n'_A, n_B) psi(n_A, n'_B) / (psi(n) psi(n'))]
    over replica pairs. Unweighted batches are paired by index and get a
    blocked jackknife error. Two weighted (exact) batches are combined over
    all pairs. Swaps that break particle number contribute 0.
    Return Values:
    -On Success:    an ObservableEstimate of S_2
    -On Failure:    EstimatorError when every ratio vanishes
    """
    block_size = default_if_none(block_size, config.jackknife_block)
    c1, _ = config_batch(batch_1.configs)
    c2, _ = config_batch(batch_2.configs)
    sites = _site_mask(partition, c1.shape[1])
    w1, w2 = batch_1.weights, batch_2.weights
    if w1 is not None and w2 is not None:
        i, j = np.divmod(np.arange(len(c1) * len(c2)), len(c2))
        ratios = _swap_ratios(wavefunction, c1[i], batch_1.log_psi[i],
                              c2[j], batch_2.log_psi[j], sites)
        purity = float(np.dot(w1[i] * w2[j], ratios))
        if not purity > 0:
            raise EstimatorError("swap estimator saturated: exact purity {}"
                                 "".format(purity))
        return ObservableEstimate(-np.log(purity), 0.0, float(np.dot(
            w1[i] * w2[j], (ratios - purity) ** 2)), n_samples=len(ratios))
    n = min(len(c1), len(c2))
    ratios = _swap_ratios(wavefunction, c1[:n], batch_1.log_psi[:n],
                          c2[:n], batch_2.log_psi[:n], sites)
    if not np.any(ratios > 0):
        raise EstimatorError("swap estimator saturated: all {} ratios vanish "
                             "(S_2 = -ln 0)".format(n))

    def neg_log(m):
        return -np.log(m) if m > 0 else np.inf

    estimate, error, n_blocks = jackknife(ratios, block_size, neg_log)
    logger.debug("renyi-2 over %d pairs in %d blocks: %.6f +/- %.2g", n,
                 n_blocks, estimate, error)
    return ObservableEstimate(estimate, error, float(ratios.var()),
                              n_samples=n)


def renyi2_swap(wavefunction, partition, sampler_config, init, params=None,
                block_size=None):
    """
    Description: Samples two independent replicas (seeds spawned from
    sampler_config.seed) and applies the swap estimator to index-paired
    samples.
    """
    if params is not None:
        wavefunction = wavefunction.with_params(params)
    seeds = [int(s.generate_state(1)[0]) for s in
             np.random.SeedSequence(sampler_config.seed).spawn(2)]
    batches = [run_sampling(replace(sampler_config, seed=s), wavefunction,
                            init) for s in seeds]
    return renyi2_from_batches(wavefunction, partition, *batches,
                               block_size=block_size)


# fits

@dataclass(frozen=True)
class FitResult:
    names: tuple
    values: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    chi2: float
    dof: int
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def params(self):
        return dict(zip(self.names, (float(v) for v in self.values)))

    @property
    def errors(self):
        return dict(zip(self.names, (float(v) for v in
                                     np.sqrt(np.abs(np.diag(
                                         self.covariance))))))

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self):
        out = {"label": self.label, "params": self.params,
               "errors": self.errors,
               "covariance": self.covariance.tolist(),
               "residuals": self.residuals.tolist(),
               "chi2": self.chi2, "dof": self.dof}
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class ScalingFitInput:
    """
    One row per measurement: system size, coupling J/U, condensate fraction
    rho0/N and its error. Exponents come from configuration.
    """
    sizes: np.ndarray
    couplings: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    beta_over_nu: float = config.beta_over_nu
    inverse_nu: float = config.inverse_nu

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, k), dtype=np.float64) for k in
                  ("sizes", "couplings", "values", "errors")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise FitError("scaling input columns differ in length")
        if np.any(arrays[3] <= 0):
            raise FitError("scaling input errors must be positive")
        for k, a in zip(("sizes", "couplings", "values", "errors"), arrays):
            object.__setattr__(self, k, a)

    def curves(self):
        """{L: (couplings, rescaled values, rescaled errors)} sorted by J/U."""
        out = {}
        for L in np.unique(self.sizes):
            take = self.sizes == L
            order = np.argsort(self.couplings[take])
            scale = L ** self.beta_over_nu
            out[int(L) if float(L).is_integer() else float(L)] = (
                self.couplings[take][order],
                scale * self.values[take][order],
                scale * self.errors[take][order])
        return out


def softplus(x, a):
    """ln(1 + exp(a x)) / a."""
    return np.logaddexp(0.0, a * x) / a


def scaling_function(x, a, b, c):
    return np.maximum(softplus(x - b, a), 1e-300) ** c


def _scaling_jacobian(x, a, b, c):
    t = x - b
    s = np.maximum(softplus(t, a), 1e-300)
    sig = expit(a * t)
    f = s ** c
    dfds = c * f / s
    return np.column_stack([dfds * (t * sig - s) / a,
                            -dfds * sig,
                            f * np.log(s)])


def _covariance(jac, chi2, dof):
    cov = np.linalg.pinv(jac.T @ jac)
    if dof > 0:
        cov = cov * (chi2 / dof)
    return cov


def _fit_curve(x, y, sigma, starts, label):
    def residuals(p):
        return (scaling_function(x, *p) - y) / sigma

    def jacobian(p):
        return _scaling_jacobian(x, *p) / sigma[:, None]

    best = None
    for p0 in starts:
        try:
            res = least_squares(residuals, p0, jac=jacobian, method="lm",
                                x_scale="jac")
        except (ValueError, FloatingPointError):
            continue
        if not res.success or not np.all(np.isfinite(res.x)) or res.x[0] <= 0:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        logger.warning("scaling fit %s did not converge from %d starts",
                       label, len(starts))
        raise FitError("scaling fit {} did not converge".format(label),
                       residuals(np.asarray(starts[0])))
    chi2 = float(2.0 * best.cost)
    dof = len(x) - 3
    return FitResult(names=("a", "b", "c"), values=best.x,
                     covariance=_covariance(best.jac, chi2, dof),
                     residuals=best.fun, chi2=chi2, dof=dof, label=label)


def _starts(x, y, n_starts):
    """Deterministic grid of (a, b, c) starting points."""
    above = x[y > 0.1 * np.max(y)]
    b0 = float(above.min()) if len(above) else float(np.median(x))
    span = max(float(np.ptp(x)), 1e-12)
    grid = [(a * 10.0 / span, b0, c) for a in (0.3, 1.0, 3.0, 10.0)
            for c in (0.5, 1.0)]
    return [np.array(p) for p in grid[:max(n_starts, 1)]]


def fit_scaling_function(inp, n_starts=None):
    """
    Description: Weighted least squares (Levenberg-Marquardt with analytic
    Jacobian, multi-start) of f(J/U) = [softplus_a(J/U - b)]**c to every
    rescaled curve L**(beta/nu) rho0/N. b estimates J_c/U.
    Return Values:
    -On Success:    {L: FitResult with params a, b, c and their covariance}
    -On Failure:    FitError for curves with < 4 points or no converged
                    start
    """
    n_starts = default_if_none(n_starts, config.fit_starts)
    results = {}
    for L, (x, y, sigma) in inp.curves().items():
        if len(x) < 4:
            raise FitError("curve L={} has {} points, need >= 4".format(
                L, len(x)))
        results[L] = _fit_curve(x, y, sigma, _starts(x, y, n_starts),
                                "L={}".format(L))
        logger.debug("scaling fit L=%s: %s", L, results[L].params)
    return results


def data_collapse_transform(points, critical_coupling=None,
                            beta_over_nu=None, inverse_nu=None):
    """
    Description: (L, J/U, y) -> (L, L**(1/nu) (J/U - J_c/U), L**(beta/nu) y).
    """
    critical_coupling = default_if_none(critical_coupling,
                                        config.critical_coupling)
    beta_over_nu = default_if_none(beta_over_nu, config.beta_over_nu)
    inverse_nu = default_if_none(inverse_nu, config.inverse_nu)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    L = pts[:, 0]
    return np.column_stack([L, L ** inverse_nu * (pts[:, 1] -
                                                  critical_coupling),
                            L ** beta_over_nu * pts[:, 2]])


def collapse_quality(collapsed, degree=3):
    """
    Sum of squared deviations of collapsed points (L, X, Y) from one pooled
    least-squares polynomial Y(X). Smaller is a better collapse.
    """
    pts = np.atleast_2d(np.asarray(collapsed, dtype=np.float64))
    poly = np.polynomial.Polynomial.fit(pts[:, 1], pts[:, 2], degree)
    return float(np.sum((poly(pts[:, 1]) - pts[:, 2]) ** 2))


def fit_entropy_scaling(sizes, entropies, errors, superfluid,
                        log_coefficient=None):
    """
    Description: Weighted linear fit of S_2 = a L + b 1[superfluid] ln L + c.
    log_coefficient freezes b (for instance at 1/2).
    Return Values:
    -On Success:    a FitResult with params a, b, c (b = 0 and zero
                    variance in the Mott branch or when frozen)
    -On Failure:    FitError with fewer than 3 sizes or a rank-deficient
                    design
    """
    L = np.asarray(sizes, dtype=np.float64)
    S = np.asarray(entropies, dtype=np.float64)
    sigma = np.asarray(errors, dtype=np.float64)
    if len(np.unique(L)) < 3:
        raise FitError("entropy scaling needs >= 3 sizes, got {}".format(
            len(np.unique(L))))
    if np.any(sigma <= 0):
        raise FitError("entropy errors must be positive")
    free_log = superfluid and log_coefficient is None
    b_fixed = 0.0 if not superfluid else default_if_none(log_coefficient, 0.0)
    target = S - b_fixed * np.log(L)
    columns = [L, np.log(L), np.ones_like(L)] if free_log else \
        [L, np.ones_like(L)]
    A = np.column_stack(columns) / sigma[:, None]
    rhs = target / sigma
    coef, _, rank, _ = scipy.linalg.lstsq(A, rhs)
    if rank < A.shape[1]:
        raise FitError("entropy design matrix has rank {} < {}".format(
            rank, A.shape[1]))
    resid = A @ coef - rhs
    chi2 = float(resid @ resid)
    dof = len(L) - A.shape[1]
    cov_free = _covariance(A, chi2, dof)
    cov = np.zeros((3, 3))
    if free_log:
        values = coef
        cov[:] = cov_free
    else:
        values = np.array([coef[0], b_fixed, coef[1]])
        keep = np.ix_([0, 2], [0, 2])
        cov[keep] = cov_free
    return FitResult(names=("a", "b", "c"), values=values, covariance=cov,
                     residuals=resid, chi2=chi2, dof=dof,
                     label="superfluid" if superfluid else "mott")

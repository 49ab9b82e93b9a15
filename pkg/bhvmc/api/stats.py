# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Monte Carlo error analysis shared by all estimators: chain-aware means,
integrated autocorrelation times, split R-hat and blocked jackknife.
"""
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ObservableEstimate:
    mean: float
    error: float
    variance: float
    tau_corr: float = 0.0
    r_hat: float = float("nan")
    n_samples: int = 0

    def to_dict(self):
        return {k: float(v) if k != "n_samples" else int(v)
                for k, v in asdict(self).items()}

    def __str__(self):
        return "{:.6g} +/- {:.2g} [var={:.3g}, tau={:.2g}]".format(
            self.mean, self.error, self.variance, self.tau_corr)


def _tau_single(chain):
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    n = len(chain)
    if n < 4:
        return 0.0
    x = chain - chain.mean()
    var = x.var()
    if var <= 0:
        return 0.0
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conjugate(f))[:n] / (n * var)
    tau = 0.5
    for m in range(1, n):
        tau += acf[m]
        if m >= 5 * tau:
            break
    return max(tau - 0.5, 0.0)


def statistics(values, weights=None):
    """
    values: 1-D samples, or 2-D (n_chains, n_per_chain).
    weights: optional normalized probabilities over the values (exact
    summation); the error is then 0.
    """
    v = np.asarray(values, dtype=np.float64)
    if weights is not None:
        p = np.asarray(weights, dtype=np.float64).ravel()
        flat = v.ravel()
        mean = float(np.dot(p, flat))
        var = float(np.dot(p, (flat - mean) ** 2))
        return ObservableEstimate(mean, 0.0, var, 0.0, float("nan"),
                                  len(flat))
    if v.ndim == 1:
        v = v[None, :]
    n_chains, n_per = v.shape
    n = v.size
    mean = float(v.mean())
    var = float(v.var())
    if n_per >= 4:
        tau = float(np.mean([_tau_single(c) for c in v]))
    else:
        tau = 0.0
    error = np.sqrt(var * (1.0 + 2.0 * tau) / n) if n > 0 else float("nan")
    r_hat = float("nan")
    if n_chains > 1 and n_per >= 4:
        half = n_per // 2
        split = np.concatenate([v[:, :half], v[:, half:2 * half]])
        w_var = split.var(axis=1, ddof=1).mean()
        b_var = half * split.mean(axis=1).var(ddof=1)
        if w_var > 0:
            r_hat = float(np.sqrt(((half - 1) / half * w_var
                                   + b_var / half) / w_var))
    return ObservableEstimate(mean, float(error), var, tau, r_hat, n)


def jackknife(values, block_size, func=lambda m: m):
    """
    Blocked leave-one-block-out jackknife of func(mean(values)).
    Returns (estimate, error, n_blocks).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    n_blocks = len(v) // block_size
    if n_blocks < 2:
        return float(func(v.mean())), float("nan"), n_blocks
    used = v[:n_blocks * block_size].reshape(n_blocks, block_size)
    sums = used.sum(axis=1)
    total = sums.sum()
    loo = (total - sums) / ((n_blocks - 1) * block_size)
    thetas = np.array([func(m) for m in loo])
    estimate = float(func(total / (n_blocks * block_size)))
    error = float(np.sqrt((n_blocks - 1) / n_blocks
                          * np.sum((thetas - thetas.mean()) ** 2)))
    return estimate, error, n_blocks

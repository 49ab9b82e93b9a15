# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Sampler
Metropolis-Hastings over fixed-N Fock configurations. A proposal picks a
source site with probability n_i / N, moves one boson to a uniformly chosen
neighbor slot and corrects the asymmetry with g(n|n') / g(n'|n) = n'_j / n_i.

Two syntaxes:
    chain = ChainState.start(wavefunction, init, seed)
    metropolis_step(chain, wavefunction)

    batch = run_sampling(SamplerConfig(...), wavefunction, init)

run_sampling advances all chains of a worker in lockstep. Each chain keeps
the list of its particles' sites, so drawing a source is a single uniform
index and an accepted move updates one entry.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from bhvmc.api.fock import FockConfiguration
from bhvmc.api.stats import statistics
from bhvmc.base import config
from bhvmc.base.errors import AmplitudeError, ConfigurationError
from bhvmc.base.helpers import config_batch, resolve_workers, split_evenly
from bhvmc.base.storage import atomic_write_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    n_chains: int = config.n_chains
    n_samples: int = config.n_samples
    burn_in_sweeps: int = config.burn_in_sweeps
    sweeps_per_sample: int = config.sweeps_per_sample
    seed: int = config.sampler_seed
    stuck_window: int = config.stuck_window
    workers: int = None

    def __post_init__(self):
        if self.n_chains < 1 or self.n_samples < 1:
            raise ConfigurationError("need n_chains >= 1 and n_samples >= 1")
        if self.burn_in_sweeps < 0 or self.sweeps_per_sample < 1:
            raise ConfigurationError("need burn_in_sweeps >= 0 and "
                                     "sweeps_per_sample >= 1")
        if self.n_samples % self.n_chains:
            raise ConfigurationError("n_samples={} is not divisible by "
                                     "n_chains={}".format(self.n_samples,
                                                          self.n_chains))

    @property
    def samples_per_chain(self):
        return self.n_samples // self.n_chains


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """
    Samples stored chain-major: row c * samples_per_chain + t is the t-th
    sample of chain c. weights, when present, are normalized Born
    probabilities and turn every average into an exact sum.
    """
    configs: np.ndarray
    log_psi: np.ndarray
    n_chains: int = 1
    acceptance: np.ndarray = None
    weights: np.ndarray = None
    local_energies: np.ndarray = None
    log_grads: np.ndarray = None
    final_configs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.configs)
        for name in ("log_psi", "weights", "local_energies", "log_grads"):
            value = getattr(self, name)
            if value is not None and len(value) != n:
                raise ConfigurationError("{} has {} rows, configs {}"
                                         "".format(name, len(value), n))

    @property
    def n_samples(self):
        return len(self.configs)

    @property
    def chain_index(self):
        return np.repeat(np.arange(self.n_chains),
                         self.n_samples // self.n_chains)

    @property
    def acceptance_rate(self):
        if self.acceptance is None:
            return float("nan")
        return float(np.mean(self.acceptance))

    def by_chain(self, values):
        """values reshaped to (n_chains, samples_per_chain)."""
        values = np.asarray(values)
        if self.weights is not None or self.n_chains <= 1 or \
                self.n_samples % self.n_chains:
            return values
        return values.reshape(self.n_chains, -1, *values.shape[1:])

    def statistics(self, values):
        return statistics(self.by_chain(values), self.weights)

    def mean(self, values):
        values = np.asarray(values, dtype=np.float64)
        if self.weights is None:
            return values.mean(axis=0)
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass
class ChainState:
    """
    One Markov chain: current configuration, its cached log-amplitude, a
    private generator and acceptance counters.
    """
    current: np.ndarray
    current_log_psi: float
    rng: np.random.Generator
    accepted: int = 0
    proposed: int = 0

    @classmethod
    def start(cls, wavefunction, init, seed=None):
        current = np.array(init, dtype=np.int64)
        lp = float(wavefunction.log_psi(current))
        if not np.isfinite(lp):
            raise AmplitudeError("chain starts at a configuration with "
                                 "ln psi = {}".format(lp))
        rng = seed if isinstance(seed, np.random.Generator) else \
            np.random.default_rng(seed)
        return cls(current, lp, rng)

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else 0.0


def _hop_log_g_ratio(n_src, n_dst):
    return math.log((n_dst + 1.0) / n_src)


def propose_hop(chain, geometry, rng=None):
    """
    Description: Draws a source site with probability n_i / N and one of
    its z neighbor slots uniformly.
    Return Values:
    -On Success:    (candidate, log_g_ratio, src, dst) with candidate a
                    FockConfiguration and log_g_ratio = ln(n'_dst / n_src).
                    An open-chain slot without neighbor yields
                    (None, -inf, src, -1).
    """
    if isinstance(chain, ChainState):
        current = chain.current
        rng = rng or chain.rng
    else:
        current = np.asarray(chain, dtype=np.int64)
    N = int(current.sum())
    if N < 1:
        raise ConfigurationError("cannot propose hops without particles")
    k = int(rng.integers(N))
    src = int(np.searchsorted(np.cumsum(current), k, side="right"))
    dst = int(geometry.neighbor_table[src, rng.integers(geometry.z)])
    if dst < 0:
        return None, -np.inf, src, -1
    candidate = current.copy()
    candidate[src] -= 1
    candidate[dst] += 1
    return (FockConfiguration(candidate),
            _hop_log_g_ratio(current[src], current[dst]), src, dst)


def metropolis_step(chain, wavefunction, params=None):
    """
    Description: One proposal plus accept/reject with probability
    min(1, |psi(n')/psi(n)|**2 * g(n|n') / g(n'|n)).
    Return Values:
    -On Success:    True when the move was accepted
    -On Failure:    AmplitudeError on a nan or +inf amplitude ratio
    """
    if params is not None:
        wavefunction = wavefunction.with_params(params)
    candidate, log_g, src, dst = propose_hop(chain, wavefunction.geometry)
    chain.proposed += 1
    if candidate is None:
        return False
    delta = float(wavefunction.log_ratio_hops(
        chain.current, [src], [dst],
        log_psi=np.array([chain.current_log_psi]))[0, 0])
    if math.isnan(delta) or delta == math.inf:
        raise AmplitudeError("non-finite amplitude ratio at {} for hop "
                             "{} -> {}".format(chain.current.tolist(), src,
                                               dst))
    log_acc = 2.0 * delta + log_g
    if log_acc >= 0 or math.log(chain.rng.random()) < log_acc:
        chain.current = np.asarray(candidate, dtype=np.int64)
        chain.current_log_psi += delta
        chain.accepted += 1
        return True
    return False


def initial_configuration(n_sites, N, rng=None):
    """Uniform filling when N is a multiple of n_sites, random otherwise."""
    if N % n_sites == 0:
        return np.full(n_sites, N // n_sites, dtype=np.int64)
    rng = rng or np.random.default_rng()
    return np.bincount(rng.integers(0, n_sites, size=N),
                       minlength=n_sites).astype(np.int64)


def _particles(configs):
    """Site of every boson, row by row (rows share the same N)."""
    return np.stack([np.repeat(np.arange(len(row)), row) for row in configs])


class _ChainBlock(object):
    """A contiguous block of chains advanced together by one worker."""

    def __init__(self, wavefunction, configs, rngs, stuck_window):
        self.wf = wavefunction
        self.geometry = wavefunction.geometry
        self.configs = configs
        self.particles = _particles(configs)
        self.rngs = rngs
        self.rows = np.arange(len(configs))
        self.N = int(configs[0].sum())
        self.log_psi = self.wf.log_psi(configs)
        bad = ~np.isfinite(self.log_psi)
        if np.any(bad):
            raise AmplitudeError("chains start at configurations with "
                                 "non-finite ln psi: {}".format(
                                     configs[bad][:3].tolist()))
        self.accepted = np.zeros(len(configs), dtype=np.int64)
        self.proposed = 0
        self.stuck_window = stuck_window
        self._window = np.zeros(len(configs), dtype=np.int64)
        self._window_sweeps = 0
        self._reported = np.zeros(len(configs), dtype=bool)

    def sweep(self):
        N, z = self.N, self.geometry.z
        u = np.stack([rng.random((N, 3)) for rng in self.rngs], axis=1)
        rows = self.rows
        before = self.accepted.copy()
        for t in range(N):
            k = np.minimum((u[t, :, 0] * N).astype(np.int64), N - 1)
            slot = np.minimum((u[t, :, 1] * z).astype(np.int64), z - 1)
            src = self.particles[rows, k]
            dst = self.geometry.neighbor_table[src, slot]
            valid = dst >= 0
            dst = np.where(valid, dst, src)
            delta = self.wf.log_ratio_hops(self.configs, src[:, None],
                                           dst[:, None],
                                           log_psi=self.log_psi)[:, 0]
            bad = valid & (np.isnan(delta) | (delta == np.inf))
            if np.any(bad):
                c = int(np.nonzero(bad)[0][0])
                raise AmplitudeError(
                    "non-finite amplitude ratio at {} for hop {} -> {}"
                    "".format(self.configs[c].tolist(), src[c], dst[c]))
            n_src = self.configs[rows, src]
            n_dst = self.configs[rows, dst]
            with np.errstate(divide="ignore", invalid="ignore"):
                log_acc = 2.0 * delta + np.log((n_dst + 1.0) / n_src)
                accept = valid & (np.log(u[t, :, 2]) < log_acc)
            idx = np.nonzero(accept)[0]
            self.configs[idx, src[idx]] -= 1
            self.configs[idx, dst[idx]] += 1
            self.particles[idx, k[idx]] = dst[idx]
            self.log_psi[idx] += delta[idx]
            self.accepted[idx] += 1
        self.proposed += N
        self._track_stuck(self.accepted - before)

    def _track_stuck(self, accepted_now):
        if not self.stuck_window:
            return
        self._window += accepted_now
        self._window_sweeps += 1
        if self._window_sweeps < self.stuck_window:
            return
        stuck = (self._window == 0) & ~self._reported
        for c in np.nonzero(stuck)[0]:
            logger.warning("chain stuck: no move accepted in %d sweeps at %s",
                           self.stuck_window, self.configs[c].tolist())
        self._reported |= stuck
        self._window[:] = 0
        self._window_sweeps = 0

    def run(self, burn_in, n_keep, thin):
        for _ in range(burn_in):
            self.sweep()
        self.accepted[:] = 0
        self.proposed = 0
        kept = np.empty((len(self.configs), n_keep, self.configs.shape[1]),
                        dtype=np.int64)
        for t in range(n_keep):
            for _ in range(thin):
                self.sweep()
            kept[:, t] = self.configs
        return kept


def _initial_states(init, n_chains, n_sites):
    arr = np.asarray(init, dtype=np.int64)
    if arr.ndim == 0:
        arr = initial_configuration(n_sites, int(arr))
    if arr.ndim == 1:
        arr = np.tile(arr, (n_chains, 1))
    if arr.shape != (n_chains, n_sites):
        raise ConfigurationError("initial states of shape {}, need ({}, {})"
                                 "".format(arr.shape, n_chains, n_sites))
    totals = arr.sum(axis=1)
    if np.any(arr < 0) or np.any(totals != totals[0]) or totals[0] < 1:
        raise ConfigurationError("initial states need a common N >= 1")
    return arr.copy()


def run_sampling(sampler_config, wavefunction, init, params=None):
    """
    Description: Samples |psi|**2 with sampler_config.n_chains independent
    chains. init is one configuration shared by all chains, one per chain,
    or the particle number N (uniform filling when possible). One sweep is
    N proposals; burn-in sweeps are discarded.
    Return Values:
    -On Success:    a SampleBatch with log_psi filled in, acceptance per
                    chain and the final chain states
    """
    if params is not None:
        wavefunction = wavefunction.with_params(params)
    cfg = sampler_config
    n_sites = wavefunction.geometry.n_sites
    states = _initial_states(init, cfg.n_chains, n_sites)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    rngs = [np.random.default_rng(s) for s in streams]
    workers = resolve_workers(cfg.workers)
    blocks = [_ChainBlock(wavefunction, states[sl], rngs[sl], cfg.stuck_window)
              for sl in split_evenly(cfg.n_chains, workers)]

    def work(block):
        return block.run(cfg.burn_in_sweeps, cfg.samples_per_chain,
                         cfg.sweeps_per_sample)

    if len(blocks) == 1:
        kept = [work(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            kept = list(pool.map(work, blocks))
    samples = np.concatenate(kept).reshape(-1, n_sites)
    acceptance = np.concatenate(
        [b.accepted / max(b.proposed, 1) for b in blocks])
    final = np.concatenate([b.configs for b in blocks])
    logger.debug("sampled %d configurations with %d chains, mean acceptance "
                 "%.3f", len(samples), cfg.n_chains, acceptance.mean())
    return SampleBatch(configs=samples,
                       log_psi=wavefunction.log_psi(samples),
                       n_chains=cfg.n_chains, acceptance=acceptance,
                       final_configs=final)


def dump_samples(path, batch, geometry, seed):
    """
    Writes one configuration per line, integers separated by spaces, after
    a '# L=.. N=.. seed=..' header.
    """
    configs, _ = config_batch(batch.configs if hasattr(batch, "configs")
                              else batch)
    N = int(configs[0].sum()) if len(configs) else 0
    lines = ["# L={} N={} seed={}".format(geometry.L, N, seed)]
    lines.extend(" ".join(str(int(x)) for x in row) for row in configs)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_samples(path):
    with open(path, "r") as f:
        header = f.readline()
    meta = dict(item.split("=") for item in header[1:].split())
    return np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2), \
        {k: int(v) for k, v in meta.items()}

# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Default settings used whenever an experiment file, a config object or a
function call leaves a value unset.
The optimization defaults reproduce the published optimization procedure
(learning rate, diagonal shifts, sample counts). Everything else is a
documented choice of this package and can be overridden in the experiment
file.
"""
import os

# Model

hopping = 1.0
"""The hopping rate J. Energies are reported in units of J."""

interaction = 16.8
"""The on-site repulsion U (U/J = 16.8 sits just on the Mott side)."""

linear_size = 4
"""Linear size L of the lattice."""

# Ansatz

depth = 6
"""Depth D of the backflow ResNet. 0 means bare Jastrow, must be even."""

channels = 12
"""Number of channels alpha per convolutional layer."""

kernel_radius = 1
"""Kernel radius d_K, the filter width is 2 * d_K + 1."""

use_prior = False
"""Add the ideal-condensate prior to the log-amplitude."""

layer_norm_eps = 1e-6
"""Epsilon added to the per-site channel variance in LayerNorm."""

init_seed = 1234
"""Seed used to draw the initial convolution kernels."""

# Sampler

n_chains = 256
"""Number of independent Markov chains advanced in lockstep."""

n_samples = 8192
"""Samples per optimization step for most runs."""

n_samples_deep = 12288
"""Samples per step for D = 8 at L = 20."""

burn_in_sweeps = 100
"""Sweeps discarded before the first recorded sample."""

sweeps_per_sample = 1
"""Sweeps between two recorded samples. One sweep is N proposed hops."""

sampler_seed = 0
"""Root seed, per-chain streams are spawned from (seed, chain index)."""

stuck_window = 10
"""Sweeps without a single accepted move after which a chain is reported."""

warm_burn_in_sweeps = 10
"""Burn-in of chains that continue from the previous optimization step."""

# Optimizer

learning_rate = 1e-3
"""SR learning rate eta."""

diag_shift_jastrow = 5e-4
"""Diagonal shift lambda of the QGT for the bare Jastrow."""

diag_shift_backflow = 1e-3
"""Diagonal shift lambda of the QGT once the backflow is active."""

stage1_steps = 2000
"""Optimization steps of the Jastrow-only stage."""

stage2_steps = 5000
"""Optimization steps of the full-network stage."""

dense_solver_max_params = 20000
"""Above this parameter count SR switches to conjugate gradient."""

cg_tol = 1e-10
"""Relative tolerance of the conjugate-gradient SR solver."""

cg_maxiter = 2000
"""Iteration cap of the conjugate-gradient SR solver."""

divergence_window = 50
"""Window (steps) of the divergence guard."""

divergence_factor = 0.5
"""Abort when the windowed energy rises above the best window by this
fraction of |E_best| (plus one error bar)."""

checkpoint_every = 100
"""Checkpoint interval in optimization steps."""

log_every = 10
"""Training progress is logged every this many steps."""

# Oracle

basis_max_dim = 5_000_000
"""Largest fixed-N basis the enumerator will build."""

ed_dense_max_dim = 2000
"""Largest dimension diagonalized densely, Lanczos above."""

ed_max_nnz = 5_000_000
"""Nonzero budget of the sparse Hamiltonian."""

ed_residual_tol = 1e-10
"""Largest accepted ||H v - E v|| of the ground pair."""

subsystem_max_dim = 20000
"""Largest A-subsystem basis for exact Renyi-2 entropies."""

# Estimators

jackknife_block = 64
"""Pairs per jackknife block of the swap estimator."""

fit_starts = 8
"""Multi-start count of the nonlinear scaling fit."""

critical_coupling = 0.05974
"""J_c/U of the 2D model at unit filling, used as a collapse default."""

beta_over_nu = 0.519
"""beta/nu of the 3D XY class (from (1 + eta)/2 with eta = 0.038)."""

inverse_nu = 1.489
"""1/nu of the 3D XY class (nu = 0.6717)."""

# Runtime

workers_env = "BHVMC_WORKERS"
"""Environment variable overriding the number of sampling workers."""

workers = int(os.environ.get(workers_env, "1") or 1)
"""Number of worker threads splitting the chains."""

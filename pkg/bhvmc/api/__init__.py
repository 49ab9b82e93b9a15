# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

from . import constructions, estimators, oracle, stats
from .ansatz import AnsatzParameters, AnsatzSpec, BackflowJastrow, \
    ParameterLayout, Wavefunction, bare_jastrow, init_parameters
from .fock import FockBasis, FockConfiguration, enumerate_fixed_n, hop_move
from .hamiltonian import ModelParams, TableAnsatz, condensate_fraction, \
    local_energy, mean_field_energy, one_body_density_matrix
from .lattice import LatticeGeometry, build_chain, build_lattice, \
    min_image_l1_distance, translate_site
from .optimizer import SrConfig, Stage, estimate_forces, estimate_qgt, \
    sr_step, train
from .oracle import EdResult, build_hamiltonian_matrix, exact_observables, \
    exact_renyi2, ground_state
from .sampler import ChainState, SampleBatch, SamplerConfig, \
    metropolis_step, propose_hop, run_sampling
from .stats import ObservableEstimate

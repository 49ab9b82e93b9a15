# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

"""
Command line
    bhvmc optimize  EXPERIMENT.ini [--resume]
    bhvmc measure   EXPERIMENT.ini CHECKPOINT [--renyi] [--dump-samples F]
    bhvmc ed        EXPERIMENT.ini [--output F]
    bhvmc fit       {scaling,entropy,collapse} CSV... [--output F]
    bhvmc defaults

Experiment files are INI files with the sections [model], [ansatz],
[sampler], [optimizer], [output] and [run]; every key is optional and
falls back to bhvmc.base.config. A run directory holds config.ini,
manifest.json, trace.csv, checkpoints/, summary.json and run.log.
"""
import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

import bhvmc
from bhvmc.api import estimators
from bhvmc.api.ansatz import AnsatzSpec, BackflowJastrow, init_parameters
from bhvmc.api.hamiltonian import ModelParams, local_energy, \
    mean_field_energy, one_body_density_matrix
from bhvmc.api.lattice import build_chain, build_lattice
from bhvmc.api.optimizer import SrConfig, Stage, train
from bhvmc.api.oracle import exact_observables, exact_renyi2, solve
from bhvmc.api.sampler import SamplerConfig, dump_samples, run_sampling
from bhvmc.base import config, storage
from bhvmc.base.errors import AmplitudeError, BhvmcError, ConfigError, \
    ConfigurationError, DimensionError, EstimatorError, FitError, \
    LatticeError, SolverError, TrainingDivergedError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3
EXIT_DIMENSION = 4
EXIT_DIVERGED = 5
EXIT_NUMERICAL = 6


# experiment configuration

@dataclass(frozen=True)
class ModelConfig:
    lattice: str = "square"
    L: int = config.linear_size
    periodic: bool = True
    N: int = None
    J: float = config.hopping
    U: float = config.interaction

    def geometry(self):
        if self.lattice == "square":
            return build_lattice(self.L)
        return build_chain(self.L, periodic=self.periodic)

    @property
    def n_sites(self):
        return self.L ** 2 if self.lattice == "square" else self.L

    @property
    def particles(self):
        return self.n_sites if self.N is None else self.N

    @property
    def density(self):
        return self.particles / self.n_sites


@dataclass(frozen=True)
class AnsatzConfig:
    depth: int = config.depth
    channels: int = config.channels
    kernel_radius: int = config.kernel_radius
    prior: bool = config.use_prior
    init_seed: int = config.init_seed

    def spec(self, depth=None):
        return AnsatzSpec(depth=self.depth if depth is None else depth,
                          channels=self.channels,
                          kernel_radius=self.kernel_radius,
                          use_prior=self.prior)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = config.learning_rate
    diag_shift_jastrow: float = config.diag_shift_jastrow
    diag_shift_backflow: float = config.diag_shift_backflow
    stage1_steps: int = config.stage1_steps
    stage2_steps: int = config.stage2_steps
    solver: str = "auto"
    divergence_window: int = config.divergence_window
    divergence_factor: float = config.divergence_factor

    def sr_config(self, log_every=config.log_every):
        return SrConfig(learning_rate=self.learning_rate,
                        diag_shift=self.diag_shift_jastrow,
                        solver=self.solver,
                        divergence_window=self.divergence_window,
                        divergence_factor=self.divergence_factor,
                        log_every=log_every)

    def jastrow_stage(self):
        return Stage("jastrow", "jastrow", self.stage1_steps,
                     self.diag_shift_jastrow)

    def backflow_stage(self):
        return Stage("backflow", "all", self.stage2_steps,
                     self.diag_shift_backflow)

    def stages(self, spec):
        if spec.has_backflow:
            return [self.jastrow_stage(), self.backflow_stage()]
        return [self.jastrow_stage()]


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "runs/bhvmc"
    checkpoint_every: int = config.checkpoint_every


@dataclass(frozen=True)
class RunConfig:
    depths: tuple = ()
    log_every: int = config.log_every
    obdm_samples: int = 1024
    renyi_partition: str = "half"


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    run: RunConfig = field(default_factory=RunConfig)
    text: str = field(default="", repr=False)


# INI section -> (ExperimentConfig attribute, {ini key: dataclass field})
_SECTIONS = {
    "model": ("model", {"lattice": "lattice", "L": "L",
                        "periodic": "periodic", "N": "N", "J": "J",
                        "U": "U"}),
    "ansatz": ("ansatz", {"depth": "depth", "channels": "channels",
                          "kernel_radius": "kernel_radius",
                          "prior": "prior", "init_seed": "init_seed"}),
    "sampler": ("sampler", {"chains": "n_chains", "samples": "n_samples",
                            "burn_in": "burn_in_sweeps",
                            "sweeps_per_sample": "sweeps_per_sample",
                            "seed": "seed", "stuck_window": "stuck_window"}),
    "optimizer": ("optimizer", {
        "learning_rate": "learning_rate",
        "diag_shift_jastrow": "diag_shift_jastrow",
        "diag_shift_backflow": "diag_shift_backflow",
        "stage1_steps": "stage1_steps", "stage2_steps": "stage2_steps",
        "solver": "solver", "divergence_window": "divergence_window",
        "divergence_factor": "divergence_factor"}),
    "output": ("output", {"directory": "directory",
                          "checkpoint_every": "checkpoint_every"}),
    "run": ("run", {"depths": "depths", "log_every": "log_every",
                    "obdm_samples": "obdm_samples",
                    "renyi_partition": "renyi_partition"}),
}

_CLASSES = {"model": ModelConfig, "ansatz": AnsatzConfig,
            "sampler": SamplerConfig, "optimizer": OptimizerConfig,
            "output": OutputConfig, "run": RunConfig}


def _convert(section, key, raw, default):
    try:
        if key == "depths":
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if isinstance(default, bool):
            value = raw.strip().lower()
            if value in ("1", "true", "yes", "on"):
                return True
            if value in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key == "N" or isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError("[{}] {} = {!r} is not a valid value".format(
            section, key, raw))


def parse_config(text):
    """
    Description: Parses and validates an experiment INI text.
    Return Values:
    -On Success:    an ExperimentConfig
    -On Failure:    ConfigError naming the offending section and key
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("malformed experiment file: {}".format(exc))
    parts = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError("unknown section [{}]".format(section))
        attr, keys = _SECTIONS[section]
        cls = _CLASSES[attr]
        defaults = {f.name: f.default for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError("unknown key {!r} in [{}]".format(key,
                                                                    section))
            name = keys[key]
            values[name] = _convert(section, key, raw, defaults[name])
        parts[attr] = values
    try:
        built = {attr: _CLASSES[attr](**parts.get(attr, {}))
                 for attr in _CLASSES}
    except (ConfigurationError, TypeError) as exc:
        raise ConfigError(str(exc))
    cfg = ExperimentConfig(text=text, **built)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    m = cfg.model
    if m.lattice not in ("square", "chain"):
        raise ConfigError("[model] lattice must be square or chain")
    if m.L < 2:
        raise ConfigError("[model] L must be >= 2")
    if m.lattice == "square" and not m.periodic:
        raise ConfigError("square lattices are always periodic")
    if m.particles < 1:
        raise ConfigError("[model] N must be >= 1")
    if m.J < 0 or m.U < 0:
        raise ConfigError("[model] needs J >= 0 and U >= 0")
    try:
        cfg.ansatz.spec()
        for depth in cfg.run.depths:
            cfg.ansatz.spec(depth)
        cfg.optimizer.sr_config()
    except ConfigurationError as exc:
        raise ConfigError(str(exc))
    if cfg.output.checkpoint_every < 1:
        raise ConfigError("[output] checkpoint_every must be >= 1")
    if min(cfg.optimizer.stage1_steps, cfg.optimizer.stage2_steps) < 0:
        raise ConfigError("[optimizer] stage steps must be >= 0")


def load_config(path):
    with open(path, "r") as f:
        return parse_config(f.read())


def defaults_ini():
    """A complete experiment file holding every default."""
    base = ExperimentConfig()
    lines = ["# bhvmc {} experiment defaults".format(bhvmc.__version__)]
    for section, (attr, keys) in _SECTIONS.items():
        obj = getattr(base, attr)
        lines.append("")
        lines.append("[{}]".format(section))
        for key, name in keys.items():
            value = getattr(obj, name)
            if value is None:
                lines.append("# {} =".format(key))
            elif isinstance(value, tuple):
                lines.append("{} = {}".format(key, ", ".join(map(str, value))))
            elif isinstance(value, bool):
                lines.append("{} = {}".format(key, str(value).lower()))
            else:
                lines.append("{} = {}".format(key, value))
    return "\n".join(lines) + "\n"


# run directory

def _attach_run_log(run_dir):
    handler = logging.FileHandler(os.path.join(run_dir, "run.log"))
    handler.setFormatter(bhvmc.formatter)
    handler.setLevel(logging.DEBUG)
    bhvmc.logger.addHandler(handler)
    return handler


def _prepare_run_dir(cfg, run_dir, resume):
    os.makedirs(os.path.join(run_dir, "checkpoints"), exist_ok=True)
    if not resume:
        storage.atomic_write_text(os.path.join(run_dir, "config.ini"),
                                  cfg.text)
        storage.write_manifest(run_dir, cfg.text,
                               {"sampler": cfg.sampler.seed,
                                "init": cfg.ansatz.init_seed},
                               {"workers": cfg.sampler.workers or
                                config.workers})


def _save_state(run_dir, params, geometry, step, chains):
    ckpt_dir = os.path.join(run_dir, "checkpoints")
    storage.save_checkpoint(os.path.join(ckpt_dir,
                                         "step-{:06d}.ckpt".format(step)),
                            params, geometry, step)
    storage.save_checkpoint(os.path.join(ckpt_dir, "latest.ckpt"), params,
                            geometry, step)
    if chains is not None and np.ndim(chains) == 2:
        storage.save_chains(os.path.join(ckpt_dir, "chains.bin"), chains)


def _summary(cfg, row, depth, geometry):
    n = geometry.n_sites
    e_mf = mean_field_energy(cfg.model.U, cfg.model.J, cfg.model.density,
                             geometry.z, n)
    per_site = row.E_mean / n
    return {"depth": depth, "steps": row.step + 1,
            "E_mean": row.E_mean, "E_err": row.E_err,
            "E_per_site": per_site,
            "E_per_site_over_J": per_site / cfg.model.J if cfg.model.J
            else None,
            "VarE": row.VarE, "vscore": row.vscore, "E_mf": e_mf,
            "acceptance_rate": row.acceptance_rate}


def _optimize_one(cfg, run_dir, spec, stages, resume, jastrow=None):
    """Trains one depth inside run_dir, resuming when asked and possible."""
    geometry = cfg.model.geometry()
    model = ModelParams(J=cfg.model.J, U=cfg.model.U, geometry=geometry)
    summary_path = os.path.join(run_dir, "summary.json")
    latest = os.path.join(run_dir, "checkpoints", "latest.ckpt")
    if resume and os.path.exists(summary_path):
        logger.info("%s already complete, skipped", run_dir)
        return storage.load_checkpoint(latest).params
    resuming = resume and os.path.exists(latest)
    _prepare_run_dir(cfg, run_dir, resuming)
    start_step = 0
    init = cfg.model.particles
    if resuming:
        ckpt = storage.load_checkpoint(latest)
        params = ckpt.params
        start_step = ckpt.step
        chains_path = os.path.join(run_dir, "checkpoints", "chains.bin")
        if os.path.exists(chains_path):
            init = storage.load_chains(chains_path)
        storage.truncate_trace(os.path.join(run_dir, "trace.csv"), start_step)
        logger.info("resuming %s at step %d", run_dir, start_step)
    else:
        params = init_parameters(geometry, spec,
                                 np.random.default_rng(cfg.ansatz.init_seed),
                                 jastrow=jastrow)
    wavefunction = BackflowJastrow(geometry, params)
    every = cfg.output.checkpoint_every
    trace_path = os.path.join(run_dir, "trace.csv")
    with storage.TraceWriter(trace_path, append=resuming) as writer:
        def on_step(row, new_params, chains):
            writer.write(row.to_dict())
            if (row.step + 1) % every == 0:
                _save_state(run_dir, new_params, geometry, row.step + 1,
                            chains)

        result = train(model, wavefunction, cfg.sampler,
                       cfg.optimizer.sr_config(cfg.run.log_every), stages,
                       init=init, start_step=start_step, callback=on_step)
    total = sum(s.steps for s in stages)
    _save_state(run_dir, result.params, geometry, total, result.chains)
    storage.export_parameters_json(os.path.join(run_dir, "params.json"),
                                   result.params, geometry)
    if result.trace:
        storage.atomic_write_json(
            _summary(cfg, result.trace[-1], spec.depth, geometry),
            summary_path)
    return result.params


def cmd_optimize(cfg, resume=False):
    """
    Description: Two-stage training into cfg.output.directory. With
    [run] depths, stage 1 runs once at depth 0 and every listed depth > 0
    continues from its Jastrow weights in a depth-D subdirectory.
    """
    root = cfg.output.directory
    if not cfg.run.depths:
        spec = cfg.ansatz.spec()
        _optimize_one(cfg, root, spec, cfg.optimizer.stages(spec), resume)
        return EXIT_OK
    os.makedirs(root, exist_ok=True)
    opt = cfg.optimizer
    base = _optimize_one(cfg, os.path.join(root, "depth-0"),
                         cfg.ansatz.spec(0), [opt.jastrow_stage()], resume)
    jastrow = base.block("jastrow").copy()
    summaries = {}
    for depth in cfg.run.depths:
        sub = os.path.join(root, "depth-{}".format(depth))
        if depth > 0:
            _optimize_one(cfg, sub, cfg.ansatz.spec(depth),
                          [opt.backflow_stage()], resume, jastrow=jastrow)
        path = os.path.join(sub, "summary.json")
        if os.path.exists(path):
            summaries[depth] = storage.read_json(path)
    storage.atomic_write_json({"depths": summaries},
                              os.path.join(root, "summary.json"))
    return EXIT_OK


def _partition(cfg, geometry):
    spec = cfg.run.renyi_partition.strip()
    if spec in ("", "half"):
        return list(range(geometry.n_sites // 2))
    return [int(x) for x in spec.replace(",", " ").split()]


def cmd_measure(cfg, checkpoint, renyi=False, dump=None, output=None):
    """
    Description: Loads a checkpoint and estimates energy, variance, V-score,
    the one-body density matrix, the condensate fraction and, with renyi,
    the swap S_2 of the configured partition. Writes measure.json.
    """
    ckpt = storage.load_checkpoint(checkpoint)
    geometry = ckpt.geometry
    if geometry.n_sites != cfg.model.n_sites:
        raise ConfigError("checkpoint has {} sites, experiment {}".format(
            geometry.n_sites, cfg.model.n_sites))
    model = ModelParams(J=cfg.model.J, U=cfg.model.U, geometry=geometry)
    wavefunction = BackflowJastrow(geometry, ckpt.params)
    N = cfg.model.particles
    batch = run_sampling(cfg.sampler, wavefunction, N)
    batch = replace(batch, local_energies=local_energy(
        model, wavefunction, None, batch.configs))
    energy = batch.statistics(batch.local_energies)
    e_mf = mean_field_energy(model.U, model.J, N / geometry.n_sites,
                             geometry.z, geometry.n_sites)
    try:
        score = estimators.vscore(energy.mean, energy.variance, e_mf,
                                  geometry.n_sites)
    except EstimatorError:
        score = None
    obdm = one_body_density_matrix(model, wavefunction, None, batch,
                                   max_samples=cfg.run.obdm_samples)
    record = {"checkpoint": os.path.abspath(checkpoint), "step": ckpt.step,
              "energy": energy.to_dict(),
              "E_per_site": energy.mean / geometry.n_sites,
              "vscore": score, "E_mf": e_mf,
              "acceptance_rate": batch.acceptance_rate,
              "condensate_fraction": obdm.rho0.to_dict(),
              "obdm": obdm.matrix.tolist(),
              "obdm_errors": obdm.errors.tolist()}
    if renyi:
        partition = _partition(cfg, geometry)
        s2 = estimators.renyi2_swap(wavefunction, partition, cfg.sampler, N)
        record["renyi2"] = dict(s2.to_dict(), partition=partition)
    if dump:
        dump_samples(dump, batch, geometry, cfg.sampler.seed)
    output = output or os.path.join(cfg.output.directory, "measure.json")
    storage.atomic_write_json(record, output)
    logger.info("E/site = %.6f +/- %.2g, rho0 = %.5f", energy.mean /
                geometry.n_sites, energy.error / geometry.n_sites,
                obdm.rho0.mean)
    return EXIT_OK


def cmd_ed(cfg, output=None):
    """
    Description: Exact ground state of the configured model. Emits
    (geometry, N, J, U, E0, rho0, S_2 of the half system) as JSON.
    """
    m = cfg.model
    geometry = m.geometry()
    ed = solve(geometry, m.particles, m.J, m.U)
    obs = exact_observables(ed)
    half = list(range(geometry.n_sites // 2))
    record = {"lattice": m.lattice, "L": m.L, "n_sites": geometry.n_sites,
              "periodic": geometry.periodic, "N": m.particles, "J": m.J,
              "U": m.U, "E0": ed.ground_energy,
              "rho0": obs.condensate_fraction,
              "S2_half": exact_renyi2(ed, half),
              "dimension": ed.dimension, "method": ed.method,
              "residual": ed.residual}
    output = output or os.path.join(cfg.output.directory, "ed.json")
    storage.atomic_write_json(record, output)
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def _scaling_input(paths, beta_over_nu, inverse_nu):
    columns = [storage.read_csv_columns(p) for p in paths]
    merged = {k: np.concatenate([c[k] for c in columns])
              for k in ("L", "J_over_U", "rho0", "rho0_err")}
    return estimators.ScalingFitInput(
        sizes=merged["L"], couplings=merged["J_over_U"],
        values=merged["rho0"], errors=merged["rho0_err"],
        beta_over_nu=beta_over_nu, inverse_nu=inverse_nu)


def cmd_fit(paths, mode, output=None, critical_coupling=None,
            beta_over_nu=None, inverse_nu=None, superfluid=False,
            log_coefficient=None):
    """
    Description: Fits on CSV inputs.
        scaling   columns L, J_over_U, rho0, rho0_err
        collapse  same columns, also writes <output>.csv with the
                  collapsed points
        entropy   columns L, S2, S2_err
    """
    for p in paths:
        if not os.path.exists(p):
            raise FileNotFoundError(p)
    beta_over_nu = config.beta_over_nu if beta_over_nu is None else \
        beta_over_nu
    inverse_nu = config.inverse_nu if inverse_nu is None else inverse_nu
    output = output or "{}.json".format(mode)
    if mode == "scaling":
        fits = estimators.fit_scaling_function(
            _scaling_input(paths, beta_over_nu, inverse_nu))
        record = {"mode": mode, "beta_over_nu": beta_over_nu,
                  "inverse_nu": inverse_nu,
                  "fits": {str(L): f.to_dict() for L, f in fits.items()}}
    elif mode == "collapse":
        inp = _scaling_input(paths, beta_over_nu, inverse_nu)
        jc = config.critical_coupling if critical_coupling is None else \
            critical_coupling
        points = np.column_stack([inp.sizes, inp.couplings, inp.values])
        collapsed = estimators.data_collapse_transform(
            points, jc, beta_over_nu, inverse_nu)
        record = {"mode": mode, "critical_coupling": jc,
                  "beta_over_nu": beta_over_nu, "inverse_nu": inverse_nu,
                  "quality": estimators.collapse_quality(collapsed)}
        storage.write_csv(os.path.splitext(output)[0] + ".csv",
                          ["L", "X", "Y"], collapsed.tolist())
    elif mode == "entropy":
        columns = [storage.read_csv_columns(p) for p in paths]
        merged = {k: np.concatenate([c[k] for c in columns])
                  for k in ("L", "S2", "S2_err")}
        fit = estimators.fit_entropy_scaling(
            merged["L"], merged["S2"], merged["S2_err"], superfluid,
            log_coefficient)
        record = {"mode": mode, "superfluid": superfluid,
                  "fit": fit.to_dict()}
    else:
        raise ConfigError("unknown fit mode {!r}".format(mode))
    storage.atomic_write_json(record, output)
    print(json.dumps(record, sort_keys=True, default=str))
    return EXIT_OK


# entry point

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bhvmc", description="Backflow-Jastrow VMC for the Bose-Hubbard "
        "model")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log debug messages to the console")
    parser.add_argument("--version", action="version",
                        version=bhvmc.__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="train the ansatz")
    p.add_argument("config")
    p.add_argument("--resume", action="store_true",
                   help="continue from checkpoints/latest.ckpt")

    p = sub.add_parser("measure", help="estimate observables")
    p.add_argument("config")
    p.add_argument("checkpoint")
    p.add_argument("--renyi", action="store_true",
                   help="also run the two-replica S_2 estimator")
    p.add_argument("--dump-samples", metavar="FILE")
    p.add_argument("--output", metavar="FILE")

    p = sub.add_parser("ed", help="exact diagonalization baseline")
    p.add_argument("config")
    p.add_argument("--output", metavar="FILE")

    p = sub.add_parser("fit", help="scaling, collapse and entropy fits")
    p.add_argument("mode", choices=["scaling", "entropy", "collapse"])
    p.add_argument("inputs", nargs="+")
    p.add_argument("--output", metavar="FILE")
    p.add_argument("--critical-coupling", type=float)
    p.add_argument("--beta-over-nu", type=float)
    p.add_argument("--inverse-nu", type=float)
    p.add_argument("--superfluid", action="store_true")
    p.add_argument("--log-coefficient", type=float,
                   help="freeze the ln L coefficient (e.g. 0.5)")

    sub.add_parser("defaults", help="print the default experiment file")
    return parser


def _setup_console(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(bhvmc.screenformater)
    handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    bhvmc.logger.addHandler(handler)
    return handler


def _exit_code(exc):
    if isinstance(exc, (ConfigError, ConfigurationError, LatticeError)):
        return EXIT_CONFIG
    if isinstance(exc, FileNotFoundError):
        return EXIT_MISSING_FILE
    if isinstance(exc, DimensionError):
        return EXIT_DIMENSION
    if isinstance(exc, TrainingDivergedError):
        return EXIT_DIVERGED
    if isinstance(exc, (SolverError, FitError, AmplitudeError,
                        EstimatorError)):
        return EXIT_NUMERICAL
    return EXIT_OTHER


def run(args):
    if args.command == "defaults":
        sys.stdout.write(defaults_ini())
        return EXIT_OK
    if args.command == "fit":
        return cmd_fit(args.inputs, args.mode, args.output,
                       args.critical_coupling, args.beta_over_nu,
                       args.inverse_nu, args.superfluid,
                       args.log_coefficient)
    cfg = load_config(args.config)
    run_dir = cfg.output.directory
    if args.command == "optimize":
        os.makedirs(run_dir, exist_ok=True)
        handler = _attach_run_log(run_dir)
        try:
            return cmd_optimize(cfg, resume=args.resume)
        finally:
            bhvmc.logger.removeHandler(handler)
            handler.close()
    if args.command == "measure":
        return cmd_measure(cfg, args.checkpoint, renyi=args.renyi,
                           dump=args.dump_samples, output=args.output)
    return cmd_ed(cfg, output=args.output)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    console = _setup_console(args.verbose)
    try:
        return run(args)
    except (BhvmcError, OSError, ValueError) as exc:
        code = _exit_code(exc)
        logger.error("%s: %s", type(exc).__name__, exc)
        logger.debug("traceback", exc_info=True)
        return code
    finally:
        bhvmc.logger.removeHandler(console)

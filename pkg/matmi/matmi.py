# -*- coding: utf-8 -*-
"""
Command line entry points: synth, reconstruct, verify, report and sweep.
"""

import json
import logging
import os
import sys

from contextlib import contextmanager

from matmi import experiments, fileio, matlog, utils, verify
from matmi.arguments import ArgumentParserError, create_parser
from matmi.exceptions import InputError, MatmiError
from matmi.fields import ScalarField, check_same_mesh, l2_norm
from matmi.forward import ForwardProblem
from matmi.mesh import check_square_arguments
from matmi.reconstruct import (AdmissibleSet, ReconstructionConfig,
                               reconstruct)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_ERROR = 3

MANIFEST = "manifest.json"
FILES = {"sigma_true": "sigma_true.fld",
         "tensor": "tensor.fld",
         "data": "data.fld",
         "data_noisy": "data_noisy.fld",
         "sigma": "sigma.fld",
         "log": "log.csv",
         "sweep": "sweep.csv"}

SYNTH_DEFAULTS = {"phantom": "inclusion", "n": 64, "delta": 0.0, "seed": 0,
                  "oracle_n": None, "diagonal": "right",
                  "data_rel_tol": 1e-10}


def _make_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as err:
        raise InputError(f"Cannot create output directory {path}: {err}")


@contextmanager
def invalid_input(what):
    """Re-raise ValueErrors from checking user settings as InputError"""
    try:
        yield
    except ValueError as err:
        raise InputError(f"Invalid {what}: {err}") from err


########################################################################
############################## Commands ################################

@utils.timed
def cmd_synth(phantom="inclusion", n=64, delta=0.0, seed=0, out=".",
              oracle_n=None, diagonal="right", csv=False,
              data_rel_tol=1e-10):
    """Synthesise internal data for a registered phantom

    Writes the true sigma, the tensor, the data and, for delta > 0, the
    noisy data, together with a manifest.

    Returns
    -------
    files : :obj:`dict`
        Paths of the written files
    """
    if delta < 0:
        raise InputError(f"Noise level must be >= 0, got {delta}")
    with invalid_input("mesh"):
        check_square_arguments(n, diagonal)
        if oracle_n is not None:
            check_square_arguments(oracle_n, diagonal)

    ph, g = experiments.synthesize_data(phantom, n, rel_tol=data_rel_tol,
                                        oracle_n=oracle_n, diagonal=diagonal)
    _make_dir(out)

    files = {"sigma_true": FILES["sigma_true"], "tensor": FILES["tensor"],
             "data": FILES["data"]}
    fileio.write_field(os.path.join(out, FILES["sigma_true"]), ph.sigma,
                       name="sigma_true", csv=csv)
    fileio.write_field(os.path.join(out, FILES["tensor"]), ph.D,
                       name="tensor", csv=csv)
    fileio.write_field(os.path.join(out, FILES["data"]), g, name="data",
                       csv=csv)

    if delta > 0:
        g_delta = experiments.add_noise(g, delta, seed)
        fileio.write_field(os.path.join(out, FILES["data_noisy"]), g_delta,
                           name="data_noisy", csv=csv)
        files["data_noisy"] = FILES["data_noisy"]
        logger.info(f"Noise level {delta}: relative data perturbation "
                    f"{l2_norm(g_delta - g) / l2_norm(g):.4f}")

    manifest = fileio.build_manifest(
        command="synth", phantom=phantom, n=n, diagonal=diagonal,
        delta=delta, seed=seed, oracle_n=oracle_n,
        data_rel_tol=data_rel_tol, sigma0=ph.sigma0,
        admissible=ph.admissible, lam=ph.lam, eta=ph.eta, files=files)
    fileio.write_manifest(os.path.join(out, MANIFEST), manifest)

    logger.info(f"Synthesised '{phantom}' data on a {n}-cell mesh in {out}")
    return {k: os.path.join(out, v) for k, v in files.items()}


def load_data(data_dir, clean=False):
    """Read the fields and manifest written by :func:`cmd_synth`

    Returns
    -------
    manifest : :obj:`dict`
    fields : :obj:`dict`
        sigma_true, tensor and data (the noisy data unless :attr:`clean`)
    noise_level : :obj:`float`
    """
    manifest = fileio.read_manifest(os.path.join(data_dir, MANIFEST))
    files = manifest.get("files", {})
    if "data" not in files or "tensor" not in files:
        raise InputError(f"{data_dir}: manifest lists no data or tensor")

    use_noisy = "data_noisy" in files and not clean
    data_key = "data_noisy" if use_noisy else "data"

    sigma_true = None
    if "sigma_true" in files:
        sigma_true = fileio.read_field(os.path.join(data_dir,
                                                    files["sigma_true"]))
    mesh = sigma_true.mesh if sigma_true is not None else None
    D = fileio.read_field(os.path.join(data_dir, files["tensor"]), mesh)
    g = fileio.read_field(os.path.join(data_dir, files[data_key]), D.mesh)

    if not isinstance(g, ScalarField):
        raise InputError(f"{files[data_key]} does not hold a scalar field")
    check_same_mesh(g, D)

    fields = {"sigma_true": sigma_true, "tensor": D, "data": g}
    noise = float(manifest.get("delta", 0.0)) if use_noisy else 0.0
    return manifest, fields, noise


@utils.timed
def cmd_reconstruct(data=".", out=".", clean=False, csv=False, cfg=None):
    """Reconstruct sigma from synthesised data

    Nothing is written unless the inputs are consistent and the run
    succeeds.

    Returns
    -------
    sigma : :obj:`matmi.fields.ScalarField`
    log : :obj:`matmi.reconstruct.IterationLog`
    """
    manifest, fields, noise = load_data(data, clean)
    cfg = cfg or ReconstructionConfig()
    cfg = cfg.updated(noise_level=noise)

    D = fields["tensor"]
    g = fields["data"]
    with invalid_input(f"data in {data}"):
        sigma0 = ScalarField.constant(g.mesh, manifest.get("sigma0", 0.2))
        S = AdmissibleSet(sigma0, **manifest.get(
            "admissible", experiments.DEFAULT_ADMISSIBLE))
        fp = ForwardProblem(g.mesh, D)

    sigma, log = reconstruct(fp, g, S, cfg, sigma_true=fields["sigma_true"])

    _make_dir(out)
    fileio.write_field(os.path.join(out, FILES["sigma"]), sigma,
                       name="sigma", csv=csv)
    fileio.write_log(os.path.join(out, FILES["log"]), log)

    final_error = None
    if fields["sigma_true"] is not None:
        final_error = experiments.relative_l2_error(sigma,
                                                    fields["sigma_true"])
        logger.info(f"Final relative error: {final_error:.4e}")

    result = fileio.build_manifest(
        command="reconstruct", data=os.path.abspath(data),
        source=manifest, config=cfg.to_dict(), iterations=len(log),
        stop_reason=log.stop_reason, final_error=final_error,
        run=log.attrs,
        files={"sigma": FILES["sigma"], "log": FILES["log"]})
    fileio.write_manifest(os.path.join(out, MANIFEST), result)
    return sigma, log


@utils.timed
def cmd_verify(level="quick", out="verify.json", n_workers=1):
    """Run a verification suite and write its JSON report

    Returns
    -------
    report : :obj:`dict`
    """
    results = verify.run_suite(level, n_workers=n_workers)
    rep = verify.report(results, level)
    with open(out, "w") as f:
        json.dump(rep, f, indent=2, default=fileio._jsonable)
        f.write("\n")

    for r in results:
        status = utils.status_text(r.passed)
        logger.info(f"{r.name:<25} {status}  value {r.value:.4e}")
    logger.info(f"Verification report at: {out}")
    return rep


def cmd_report(log, out):
    """Plot-ready table from an iteration log or a sweep table

    Writes iteration against error and residual for a log, and delta
    against error for a sweep table.

    Returns
    -------
    table : :obj:`xarray.Dataset`
    """
    ds = fileio.read_table(log)
    if "delta" in ds.coords:
        table = ds[["error"]]
    elif "iteration" in ds.coords:
        table = ds[[_ for _ in ("error", "residual") if _ in ds]]
    else:
        raise InputError(f"{log}: neither an iteration log nor a sweep "
                         "table")
    fileio.write_table(out, table)
    logger.info(f"Table at: {out}")
    return table


@utils.timed
def cmd_sweep(phantom="inclusion", n=64, deltas=experiments.NOISE_LEVELS,
              seed=0, out=".", cfg=None, n_workers=None):
    """Reconstruction error for a range of noise levels

    Returns
    -------
    table : :obj:`xarray.Dataset`
    """
    cfg = cfg or ReconstructionConfig()
    deltas = list(deltas)
    if any(d < 0 for d in deltas):
        raise InputError("Noise levels must be >= 0")
    with invalid_input("mesh"):
        check_square_arguments(n)
    if n_workers is None:
        n_workers = utils.resource_defaults(len(deltas))

    ph, g = experiments.synthesize_data(phantom, n)
    table = experiments.noise_sweep(ph, g, cfg, deltas, seed, n_workers)

    _make_dir(out)
    fileio.write_table(os.path.join(out, FILES["sweep"]), table)
    manifest = fileio.build_manifest(
        command="sweep", phantom=phantom, n=n, deltas=deltas, seed=seed,
        config=cfg.to_dict(), files={"sweep": FILES["sweep"]})
    fileio.write_manifest(os.path.join(out, MANIFEST), manifest)
    return table


########################################################################
################################ Main ##################################

def _pick(options, config, key, default, kind):
    value = getattr(options, key, None)
    if value is None and key in config:
        value = utils.convert_value(config[key], kind)
    return default if value is None else value


def _config_from(options, config):
    """ReconstructionConfig from a config file overridden by options"""
    overrides = {}
    for key in ("algorithm", "max_iter", "mu", "c_eps", "epsilon",
                "solver_rel_tol"):
        value = getattr(options, key, None)
        if value is not None:
            overrides[key] = value
    with invalid_input("reconstruction settings"):
        return ReconstructionConfig.from_dict(config).updated(**overrides)


def run(options):
    """Execute a parsed command. Returns the exit status."""
    config = utils.read_config(options.config) if options.config else {}

    if options.command == "synth":
        kwargs = {key: _pick(options, config, key, default,
                             type(default) if default is not None else int)
                  for key, default in SYNTH_DEFAULTS.items()}
        cmd_synth(out=options.out, csv=options.csv, **kwargs)

    elif options.command == "reconstruct":
        cfg = _config_from(options, config)
        cmd_reconstruct(options.data, options.out, clean=options.clean,
                        csv=options.csv, cfg=cfg)

    elif options.command == "verify":
        rep = cmd_verify(options.level, options.out,
                         n_workers=options.n_cores or 1)
        if not rep["passed"]:
            logger.error("Verification failed")
            return EXIT_VERIFY_FAILED

    elif options.command == "report":
        cmd_report(options.log, options.out)

    elif options.command == "sweep":
        deltas = options.deltas or config.get("deltas")
        deltas = (utils.parse_float_list(deltas) if deltas
                  else experiments.NOISE_LEVELS)
        cmd_sweep(phantom=_pick(options, config, "phantom", "inclusion", str),
                  n=_pick(options, config, "n", 64, int),
                  deltas=deltas,
                  seed=_pick(options, config, "seed", 0, int),
                  out=options.out, cfg=_config_from(options, config),
                  n_workers=options.n_cores)

    return EXIT_OK


def main(argv=None):
    """Main function of the matmi command. Returns the exit status."""
    parser = create_parser()
    try:
        options = parser.parse_args(argv)
    except ArgumentParserError as err:
        logger.error(f"Invalid arguments: {err}")
        parser.print_usage()
        return EXIT_INPUT_ERROR

    matlog.set_level("debug" if options.debug else "info")
    matlog.log_to_file(options.logfile or matlog.LOG_FILE)

    try:
        return run(options)
    except (InputError, OSError) as err:
        logger.error(f"Input error: {err}")
        return EXIT_INPUT_ERROR
    except (MatmiError, ValueError) as err:
        logger.error(f"Solver failure: {err}")
        return EXIT_SOLVER_ERROR


if __name__ == "__main__":
    sys.exit(main())

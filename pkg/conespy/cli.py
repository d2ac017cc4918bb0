"""
Copyright (c) 2024, the conespy authors
All rights reserved.

Redistribution and use in source and binary forms, with or without
modification, are permitted provided that the following conditions are met:
    * Redistributions of source code must retain the above copyright
      notice, this list of conditions and the following disclaimer.
    * Redistributions in binary form must reproduce the above copyright
      notice, this list of conditions and the following disclaimer in the
      documentation and/or other materials provided with the distribution.
    * Neither the name of the conespy authors nor the
      names of its contributors may be used to endorse or promote products
      derived from this software without specific prior written permission.

THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND
ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
DISCLAIMED. IN NO EVENT SHALL THE CONESPY AUTHORS BE LIABLE FOR ANY
DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES
(INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES;
LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND
ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT
(INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE OF THIS
SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
"""
import argparse
import logging
import os
import sys
import time
from collections import OrderedDict, namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, plots
from .cone import ConeSpec
from .config import FLOW_BETA, FLOW_RHO, COMMANDS, RunConfig, load_document, overlay, sweep_entries
from .contenttypes import CurveRow, MarginRow, OverlapRow, SnapshotRow, SpectrumRow, SweepRow
from .controllers import FlowRun, SweepRun, run_directory
from .exceptions import EXIT_OK, AdmissibilityError, ConespyError, ConfigError, DomainError, FitError, exit_code
from .flowsim import (FlowState, admissibility, blowup_exponent, build_initial_state, measure_kappa, rescale,
                      simulate, snapshot_record, t_of_s, tune, tuning_modes, type_one_tracking, type_two_decay,
                      verify_outer_barriers, verify_tip_barriers)
from .foliation import (ATOL, ConeFrame, foliation_distance, integrate_profile, jacobi_field_positivity,
                        leaf_family, shoot_leaf)
from .params import (ALPHA_TERMS, DEFAULT_BETA, DEFAULT_RHO, ParamBundle, admissible_intervals, build_bundle,
                     check_alpha_condition, simons_asymptotics)
from .spectrum import cutoff_overlap_decay, order_and_select
from .wspace import build_quadrature, certificate_to_dict, coercivity_certificate

LOG = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"

CLOSED_FORM_TOL = 1e-12
LEAF_SLOPE_TOL = 0.05
LEAF_CORRECTION_TOL = 0.9
BLOWUP_REL_TOL = 0.1
OVERLAP_REL_TOL = 0.1
OVERLAP_S = np.linspace(2.0, 8.0, 13)
EQUILIBRIUM_SPAN = 10.0
FRAMES = ("x", "y", "z")

RunResult = namedtuple("RunResult", "output_dir command status exit_code headline metrics")


def claim(value, module, tolerance=None):
    """A reported number with the module that produced it and the tolerance it is held to"""

    return OrderedDict([("value", value), ("module", module), ("tolerance", tolerance)])


def _spectrum(cone, settings):
    quad = build_quadrature(cone.n, settings["order"])
    return order_and_select(cone, settings["cutoff"], quad, settings["l"]), quad


def _bundle(config, spectrum, t0=None, flow=False):
    params = config.params
    beta = params["beta"] if params["beta"] is not None else (FLOW_BETA if flow else DEFAULT_BETA)
    rho = params["rho"] if params["rho"] is not None else (FLOW_RHO if flow else DEFAULT_RHO)
    return build_bundle(spectrum, alpha_tilde=params["alpha_tilde"], xi=params["xi"], theta=params["theta"],
                        Lambda=params["Lambda"], beta=beta, rho=rho, t0=t0 if t0 is not None else params["t0"],
                        strict=params["strict"])


def _unit_leaf(cone, foliation):
    return leaf_family(cone, s0=1.0, step=foliation["step"], r_max=foliation["r_max"])


def run_spectrum(config, directory):
    cone = config.cone_spec()
    spectrum, _ = _spectrum(cone, config.spectrum)
    directory.table = [SpectrumRow.from_mode(mode, cone, index + 1 == spectrum.l)
                       for index, mode in enumerate(spectrum.modes)]

    summary = spectrum.to_dict()
    for key in ("lambda_l", "delta_l", "sigma_l", "c_l", "alpha"):
        summary[key] = claim(summary[key], "spectrum", CLOSED_FORM_TOL)
    summary["cone"] = cone.to_dict()
    summary["quadrature_order"] = config.spectrum["order"]

    certificate = coercivity_certificate(cone, basis_size=config.spectrum["basis_size"],
                                         trials=config.spectrum["trials"], seed=config.seed,
                                         workers=config.workers)
    directory.certificate = certificate_to_dict(certificate, cone)

    if config.spectrum["overlap"]:
        params = _bundle(config, spectrum)
        mode = spectrum.mode_l
        decay = cutoff_overlap_decay(mode, mode, params.beta, params.rho, spectrum.sigma_l, OVERLAP_S)
        directory.overlap = [OverlapRow(s, deviation, tail)
                             for s, deviation, tail in zip(decay.s, decay.deviation, decay.tail)]
        summary["overlap"] = OrderedDict([
            ("exponent", claim(decay.exponent, "spectrum", OVERLAP_REL_TOL)),
            ("expected", decay.expected),
            ("converged", decay.converged),
        ])

    directory.summary = summary
    directory.figure = plots.spectrum_figure(spectrum)
    metrics = OrderedDict([("lambda_l", spectrum.lambda_l), ("sigma_l", spectrum.sigma_l),
                           ("eps_tilde", certificate.eps_tilde)])
    return spectrum.lambda_l, metrics


def run_foliation(config, directory):
    cone = config.cone_spec()
    if cone.factors is None:
        raise ConfigError("foliation needs a quadratic cone given as {\"p\": .., \"q\": ..}", module="cli")
    p, q = cone.factors
    settings = config.foliation
    curves = [shoot_leaf(p, q, s0, settings["step"], settings["r_max"]) for s0 in settings["s0"]]
    leaf = _unit_leaf(cone, settings)

    rows = []
    for index, curve in enumerate(curves):
        for k in range(0, len(curve), settings["stride"]):
            rows.append(CurveRow(index, curve.sigma[k], curve.s[k], curve.t[k], curve.phi[k], curve.psi[k]))
    directory.leaves = rows

    frame = ConeFrame(p, q)
    equilibrium = integrate_profile(frame, [1.0, 0.0, 0.0], (0.0, EQUILIBRIUM_SPAN), dense_output=False)
    drift = float(max(np.max(np.abs(equilibrium.y[1])), np.max(np.abs(equilibrium.y[2]))))
    distance = foliation_distance(curves) if len(curves) > 1 else None

    summary = OrderedDict()
    summary["cone"] = cone.to_dict()
    summary["leaf"] = leaf.to_dict()
    summary["alpha_fit"] = claim(leaf.fit_alpha, "foliation", LEAF_SLOPE_TOL)
    summary["alpha_tilde_fit"] = claim(leaf.fit_alpha_tilde, "foliation", LEAF_CORRECTION_TOL)
    summary["jacobi_minimum"] = claim(jacobi_field_positivity(leaf), "foliation")
    summary["cone_equilibrium_drift"] = claim(drift, "foliation", ATOL)
    summary["axis_heights"] = list(settings["s0"])
    summary["tips"] = [float(curve.s[0]) for curve in curves]
    summary["min_distance"] = claim(distance, "foliation")
    summary["disjoint"] = distance is None or distance > 0
    directory.summary = summary
    directory.figure = plots.foliation_figure(curves, frame.theta)

    metrics = OrderedDict([("alpha_fit", leaf.fit_alpha), ("alpha_tilde_fit", leaf.fit_alpha_tilde),
                           ("min_distance", distance)])
    return leaf.fit_alpha, metrics


def run_check_params(config, directory):
    cone = config.cone_spec()
    spectrum, _ = _spectrum(cone, config.spectrum)
    n, alpha = spectrum.n, spectrum.alpha
    alpha_tilde = config.params["alpha_tilde"]
    if alpha_tilde is None:
        alpha_tilde = 2.0 - 2.0 * alpha
    condition = check_alpha_condition(n, alpha, alpha_tilde, spectrum.lambda_l, spectrum.delta_l)
    intervals = admissible_intervals(n, alpha, alpha_tilde, spectrum.lambda_l, spectrum.delta_l)
    bundle = _bundle(config, spectrum)

    rows = [MarginRow("alpha: {}".format(name), margin, margin > 0)
            for name, margin in zip(ALPHA_TERMS, condition.margins)]
    rows.extend(MarginRow(name, margin, margin > 0) for name, margin in bundle.margins.items())
    directory.margins = rows

    report = OrderedDict()
    report["n"] = n
    report["alpha"] = claim(alpha, "spectrum", CLOSED_FORM_TOL)
    report["alpha_tilde"] = alpha_tilde
    report["alpha_condition"] = OrderedDict([
        ("passed", condition.passed),
        ("lhs", claim(condition.lhs, "params", CLOSED_FORM_TOL)),
        ("terms", OrderedDict(zip(ALPHA_TERMS, condition.terms))),
        ("margins", OrderedDict((name, claim(margin, "params", CLOSED_FORM_TOL))
                                for name, margin in zip(ALPHA_TERMS, condition.margins))),
    ])
    report["intervals"] = intervals._asdict()
    report["bundle"] = bundle.to_dict()
    if n >= 50:
        asymptotics = simons_asymptotics(n)
        report["asymptotics"] = asymptotics._asdict()
        report["alpha_asymptotic_gap"] = claim(abs(asymptotics.alpha_exact - asymptotics.alpha_approx), "params",
                                               asymptotics.alpha_tolerance)
    directory.report = report

    metrics = OrderedDict([("n", n), ("alpha", alpha), ("alpha_margin_2", condition.margins[1]),
                           ("alpha_condition", condition.passed), ("valid", bundle.valid)])
    return condition.margins[1], metrics


def _fit_report(name, fit):
    try:
        return fit()._asdict()
    except (FitError, DomainError) as exc:
        LOG.warning("No %s fit: %s", name, exc)
        return OrderedDict([("error", str(exc))])


def _state_document(state, config, settings):
    document = state.to_dict()
    document["cone"] = state.cone.to_dict()
    document["spectrum"] = OrderedDict(config.spectrum)
    document["foliation"] = OrderedDict(config.foliation)
    document["settings"] = settings.to_dict()
    return document


def run_flow(config, directory):
    cone = config.cone_spec()
    spectrum, _ = _spectrum(cone, config.spectrum)
    settings = config.flow_settings()
    params = _bundle(config, spectrum, t0=settings.t0, flow=True)
    leaf = _unit_leaf(cone, config.foliation)

    report = OrderedDict()
    report["params"] = params.to_dict()
    if settings.tune:
        target_s = config.flow["target_s"] if config.flow["target_s"] is not None else settings.s_end
        record = tune(t_of_s(target_s), params, spectrum, leaf, cone, settings)
        a = record.a
        report["tuning"] = OrderedDict([("a", record.a), ("target_time", record.target_time),
                                        ("residual", claim(float(np.linalg.norm(record.residual)), "flowsim",
                                                           settings.tune_tolerance)),
                                        ("iterations", record.iterations), ("converged", record.converged)])
    elif config.flow["a"] is not None:
        a = np.array(config.flow["a"])
    else:
        a = np.zeros(len(tuning_modes(spectrum)))

    state = build_initial_state(params, spectrum, leaf, a, cone, settings)
    rows = []

    def observe(snapshot):
        record = snapshot_record(snapshot)
        rows.append(SnapshotRow.from_record(record))
        if not record["admissible"]:
            check = admissibility(snapshot, "x")
            raise AdmissibilityError("Admissibility monitor fired at s={:.4f} (worst ratio {:.4g})".format(
                snapshot.s, check.worst_ratio), module="flowsim", violations=check.violations)

    try:
        final, history = simulate(state, settings.s_end, settings, observer=observe)
    finally:
        directory.snapshots = rows

    expected = -(0.5 + spectrum.sigma_l)
    blowup = _fit_report("blow-up", lambda: blowup_exponent(history))
    if "exponent" in blowup:
        blowup["exponent"] = claim(blowup["exponent"], "flowsim", BLOWUP_REL_TOL)
    report["blowup"] = blowup
    report["type_one"] = _fit_report("type I tracking", lambda: type_one_tracking(history))
    report["type_two"] = _fit_report("type II decay", lambda: type_two_decay(history))
    report["kappa"] = claim(measure_kappa(final), "flowsim")
    report["outer_barriers"] = verify_outer_barriers(final)._asdict()
    if final.tip is not None:
        report["tip_barriers"] = verify_tip_barriers(final, leaf, strict=False)._asdict()
    report["admissibility"] = OrderedDict((frame, admissibility(final, frame)._asdict()) for frame in FRAMES)

    directory.final_state = _state_document(final, config, settings)
    directory.report = report
    directory.curvature_figure = plots.curvature_figure(rows, expected)
    stride = max(1, len(history) // 6)
    directory.profile_figure = plots.profile_figure([rescale(item, "typeI") for item in history[::stride]])

    exponent = blowup["exponent"]["value"] if "exponent" in blowup else None
    metrics = OrderedDict([("blowup_exponent", exponent), ("expected", expected), ("kappa", report["kappa"]["value"]),
                           ("snapshots", len(rows))])
    return exponent, metrics


def run_verify(config, directory):
    source = FlowRun(config.verify["run_dir"])
    if not source.has("final_state.json"):
        raise ConfigError("verify.run_dir {} holds no final_state.json".format(source.path), module="cli")
    data = source.final_state
    cone = ConeSpec.from_dict(data["cone"])
    spectrum, _ = _spectrum(cone, data["spectrum"])
    params = ParamBundle.from_dict(data["params"])
    leaf = _unit_leaf(cone, data["foliation"])
    state = FlowState.from_dict(data, params, spectrum, cone, unit_leaf=leaf)

    frames = OrderedDict((frame, admissibility(state, frame)) for frame in FRAMES)
    outer = verify_outer_barriers(state)
    tip = verify_tip_barriers(state, leaf, strict=False) if state.tip is not None else None

    report = OrderedDict()
    report["run_dir"] = source.path
    report["s"] = state.s
    report["admissibility"] = OrderedDict((frame, check._asdict()) for frame, check in frames.items())
    report["outer_barriers"] = outer._asdict()
    report["tip_barriers"] = tip._asdict() if tip is not None else None
    directory.report = report

    worst = max(check.worst_ratio for check in frames.values())
    failed = [frame for frame, check in frames.items() if not check.admissible]
    if failed:
        raise AdmissibilityError("Stored state is not admissible in frame(s) {}".format(", ".join(failed)),
                                 module="flowsim", violations=frames[failed[0]].violations)
    point_violations = len(outer.violations) + (len(tip.lower_violations) + len(tip.upper_violations) if tip else 0)
    if point_violations:
        raise AdmissibilityError("Stored state crosses its barriers at {} point(s)".format(point_violations),
                                 module="flowsim")
    metrics = OrderedDict([("worst_ratio", worst), ("outer_ok", outer.ok),
                           ("tip_ok", tip.ok if tip is not None else None)])
    return worst, metrics


RUNNERS = OrderedDict([
    ("spectrum", run_spectrum),
    ("foliation", run_foliation),
    ("flow", run_flow),
    ("check-params", run_check_params),
    ("verify", run_verify),
])


def run(config):
    """
    Run one command and write its artifacts plus manifest.json. A plain mapping is validated
    first; schema errors come back as exit code 2 without touching the disk.
    """
    if not isinstance(config, RunConfig):
        try:
            config = RunConfig.from_dict(config)
        except ConfigError as exc:
            LOG.error("%s", exc)
            return RunResult(None, None, "invalid", exit_code(exc), None, OrderedDict([("error", str(exc))]))

    directory = run_directory(config.command, config.output_dir)
    started = time.time()
    status, code, headline, metrics = "ok", EXIT_OK, None, OrderedDict()
    try:
        headline, metrics = RUNNERS[config.command](config, directory)
    except ConespyError as exc:
        status, code = "failed", exit_code(exc)
        metrics = OrderedDict([("error", str(exc))])
        LOG.error("%s failed: %s", config.command, exc)
        directory.error = "{}\n".format(exc)

    manifest = OrderedDict()
    manifest["command"] = config.command
    manifest["config"] = config.to_dict()
    manifest["seed"] = config.seed
    manifest["version"] = __version__
    manifest["wall_time"] = time.time() - started
    manifest["status"] = status
    manifest["exit_code"] = code
    manifest["metrics"] = metrics
    directory.manifest = manifest
    LOG.info("%s finished with status %s in %s", config.command, status, config.output_dir)
    return RunResult(config.output_dir, config.command, status, code, headline, metrics)


def _format_metric(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value).replace(",", " ").replace(";", " ")


def summary_row(result):
    metrics = ";".join("{}={}".format(key, _format_metric(value)) for key, value in result.metrics.items())
    headline = result.headline if isinstance(result.headline, (int, float, np.number)) else None
    return SweepRow(result.output_dir, result.command, result.status, result.exit_code, headline,
                    metrics.replace(",", " ").replace("\n", " "))


def sweep(configs, workers=1, summary_dir=None):
    """
    Run isolated configs, concurrently with workers > 1, and collect one SweepRow each in input
    order. Duplicate output directories are refused before anything runs.
    """
    configs = [config if isinstance(config, RunConfig) else RunConfig.from_dict(config) for config in configs]
    seen = {}
    for config in configs:
        path = os.path.abspath(config.output_dir)
        if path in seen:
            raise ConfigError("Sweep entries {!r} and {!r} share the output directory {}".format(
                seen[path], config, path), module="cli")
        seen[path] = config

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(config) for config in configs]

    rows = [summary_row(result) for result in results]
    if summary_dir is not None:
        SweepRun(summary_dir).summary = rows
    return rows


def build_parser():
    parser = argparse.ArgumentParser(prog="conespy",
                                     description="Type II singularities of mean curvature flow near minimizing cones")
    subparsers = parser.add_subparsers(dest="command")
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="JSON run config; an object with `runs` starts a sweep")
        sub.add_argument("--out", help="output directory (sweep: parent of the run directories)")
        sub.add_argument("--seed", type=int, help="seed recorded in the manifest and used by randomized checks")
        sub.add_argument("--workers", type=int, help="worker threads")
        sub.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        document = load_document(args.config) if args.config else OrderedDict()
        if "runs" in document:
            entries = [overlay(entry, command=entry.get("command", args.command), seed=args.seed)
                       for entry in sweep_entries(document, args.out)]
            rows = sweep(entries, workers=args.workers or 1, summary_dir=args.out)
            return max([row.exit_code for row in rows] + [EXIT_OK])
        config = RunConfig.from_dict(overlay(document, command=args.command, output_dir=args.out, seed=args.seed,
                                             workers=args.workers))
    except ConespyError as exc:
        LOG.error("%s", exc)
        return exit_code(exc)
    return run(config).exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end over the sensing catalog.

Verbs: analyze (identifiability verdict with evidence), simulate (write a
record CSV), estimate (recover magnitudes from a record), oracle-check
(model-vs-quantum and closed-form residuals), report (re-render a saved
machine report).

Reports come in two renderings that agree on every value: a JSON document
(sorted keys, byte-identical across runs for a fixed config and seed) and
an aligned text view.  Wall-clock runtime appears only in the text view so
the JSON stays deterministic.

Exit codes: 0 success, 2 inadmissible config, 3 unidentifiable-scheme
refusal, 4 numeric/diagnostic failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import estimate, realization, ssm, sta
from .accessible import CATALOG, SensorConfig
from .errors import (
    BudgetExceeded,
    ChainsenseError,
    InadmissibleConfig,
    NumericFailure,
    OracleSizeLimit,
    UnidentifiableScheme,
)
from .prng import rational_binding, spawn_rng
from .symca import (
    exact_markov_sequence,
    solve_identifiability,
    square_substitute,
    symbolic_markov,
)
from .symca.poly import MPoly


# -- run configuration -------------------------------------------------------


@dataclass
class RunConfig:
    """Everything a command needs, merged from defaults, file, and flags."""

    n_chain: int = 2
    sensor_qubits: int = 2
    measurement: str = "ZaYb"
    initial: str | None = None
    h_values: dict[str, float] | None = None
    known_params: tuple[str, ...] = ("ha",)
    dt: float | None = None
    count: int = 120
    noise_sigma: float = 0.0
    seed: int = 0
    record_path: str | None = None
    report_path: str | None = None

    def sensor_config(self) -> SensorConfig:
        initial = self.initial
        if initial is None:
            key = (self.measurement, self.sensor_qubits)
            if key not in CATALOG:
                raise InadmissibleConfig(
                    f"measurement {self.measurement!r} with a "
                    f"{self.sensor_qubits}-qubit sensor is not in the catalog"
                )
            options = CATALOG[key]
            if len(options) == 1:
                initial = options[0]
            else:
                raise InadmissibleConfig(
                    f"scheme {self.measurement}@{self.sensor_qubits}q admits "
                    f"several initial states ({', '.join(options)}); "
                    "pick one with --initial"
                )
        return SensorConfig(self.n_chain, self.sensor_qubits,
                            self.measurement, initial)


_FILE_SCHEMA = {
    "scheme": {"n_chain", "sensor_qubits", "measurement", "initial", "known"},
    "truth": None,  # any parameter name
    "sampling": {"dt", "count", "noise_sigma", "seed"},
    "output": {"record", "report"},
}


def read_config_file(path: str) -> dict:
    """Parse the key=value section file into a flat override dict."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise InadmissibleConfig(f"config file {path!r} not found")
    for section in parser.sections():
        if section not in _FILE_SCHEMA:
            raise InadmissibleConfig(
                f"config file {path!r}: unknown section [{section}]"
            )
        allowed = _FILE_SCHEMA[section]
        if allowed is not None:
            for key in parser[section]:
                if key not in allowed:
                    raise InadmissibleConfig(
                        f"config file {path!r}: unknown key {key!r} in "
                        f"[{section}]"
                    )
    out: dict = {}
    if parser.has_section("scheme"):
        sec = parser["scheme"]
        if "n_chain" in sec:
            out["n_chain"] = sec.getint("n_chain")
        if "sensor_qubits" in sec:
            out["sensor_qubits"] = sec.getint("sensor_qubits")
        if "measurement" in sec:
            out["measurement"] = sec["measurement"]
        if "initial" in sec:
            out["initial"] = sec["initial"]
        if "known" in sec:
            out["known_params"] = tuple(
                p.strip() for p in sec["known"].split(",") if p.strip()
            )
    if parser.has_section("truth"):
        out["h_values"] = {k: float(v) for k, v in parser["truth"].items()}
    if parser.has_section("sampling"):
        sec = parser["sampling"]
        if "dt" in sec:
            out["dt"] = sec.getfloat("dt")
        if "count" in sec:
            out["count"] = sec.getint("count")
        if "noise_sigma" in sec:
            out["noise_sigma"] = sec.getfloat("noise_sigma")
        if "seed" in sec:
            out["seed"] = sec.getint("seed")
    if parser.has_section("output"):
        sec = parser["output"]
        if "record" in sec:
            out["record_path"] = sec["record"]
        if "report" in sec:
            out["report_path"] = sec["report"]
    return out


def build_run_config(args: argparse.Namespace) -> RunConfig:
    run = RunConfig()
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            setattr(run, key, value)
    flag_map = {
        "n_chain": "n_chain",
        "sensor_qubits": "sensor_qubits",
        "measurement": "measurement",
        "initial": "initial",
        "dt": "dt",
        "count": "count",
        "noise_sigma": "noise_sigma",
        "seed": "seed",
        "record": "record_path",
        "report": "report_path",
    }
    for flag, attr in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(run, attr, value)
    if getattr(args, "set", None):
        values = dict(run.h_values or {})
        for item in args.set:
            if "=" not in item:
                raise InadmissibleConfig(
                    f"--set expects name=value, got {item!r}"
                )
            name, _, raw = item.partition("=")
            try:
                values[name.strip()] = float(raw)
            except ValueError:
                raise InadmissibleConfig(
                    f"--set {item!r}: {raw!r} is not a number"
                ) from None
        run.h_values = values
    if getattr(args, "known", None) is not None:
        run.known_params = tuple(
            p.strip() for p in args.known.split(",") if p.strip()
        )
    return run


def auto_dt(config: SensorConfig, binding: dict[str, float]) -> float:
    model = ssm.build(config)
    return 0.8 * estimate.BRANCH_SAFETY / ssm.spectral_bound(model, binding)


# -- reports -----------------------------------------------------------------


@dataclass
class Report:
    command: str
    scheme: dict
    verdicts: dict
    estimates: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    seed: int = 0
    runtime_s: float = 0.0

    def payload(self) -> dict:
        return {
            "command": self.command,
            "scheme": self.scheme,
            "verdicts": self.verdicts,
            "estimates": self.estimates,
            "residuals": self.residuals,
            "evidence": self.evidence,
            "seed": self.seed,
        }

    def machine_text(self) -> str:
        return json.dumps(self.payload(), sort_keys=True, indent=2) + "\n"

    def human_text(self) -> str:
        lines = [f"chainsense {self.command}"]
        tag = self.scheme.get("tag", "?")
        lines.append(
            f"  scheme     {tag}  chain length {self.scheme.get('n_chain')}"
            f"  class {self.scheme.get('capability')}"
        )
        for section in ("verdicts", "estimates", "residuals", "evidence"):
            data = getattr(self, section)
            if not data:
                continue
            lines.append(f"  {section}:")
            for key in sorted(data):
                lines.append(f"    {key} = {_show(data[key])}")
        lines.append(f"  seed       {self.seed}")
        lines.append(f"  runtime    {self.runtime_s:.2f} s  (text view only)")
        return "\n".join(lines) + "\n"


def _show(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        inner = ", ".join(f"{k}={_show(value[k])}" for k in sorted(value))
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_show(v) for v in value) + "]"
    return repr(value) if isinstance(value, str) else str(value)


def emit(report: Report, run: RunConfig) -> None:
    sys.stdout.write(report.human_text())
    if run.report_path:
        with open(run.report_path, "w") as fh:
            fh.write(report.machine_text())
        sys.stdout.write(f"  report written to {run.report_path}\n")


def _scheme_block(config: SensorConfig) -> dict:
    return {
        "tag": config.scheme_tag,
        "n_chain": config.n_chain,
        "initial": config.initial_label,
        "capability": config.capability,
    }


# -- analyze -----------------------------------------------------------------


def _generic_probe(model, rng, capability):
    """A random exact binding, redrawn off the known degenerate surface."""
    for _ in range(10):
        binding = rational_binding(model.param_ids, rng)
        if capability == "cube" and "h1" in binding:
            if binding["ha"] ** 2 == binding["hb"] ** 2 + binding["h1"] ** 2:
                continue
        return binding
    return binding


def cmd_analyze(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    started = time.perf_counter()
    config = run.sensor_config()
    capability = config.capability
    model = ssm.build(config)
    verdicts: dict = {}
    evidence: dict = {"state_dim": model.dim}

    rng = spawn_rng(run.seed, "analyze", config.scheme_tag, str(run.n_chain))
    probe = _generic_probe(model, rng, capability)
    probe_float = {k: float(v) for k, v in probe.items()}

    if capability == "orthogonal":
        _, b, _ = ssm.evaluate(model, probe_float)
        times = np.linspace(0.0, 8.0, 33)
        y = ssm.impulse_response(model, probe_float, times)
        verdicts["identifiability"] = "incapable"
        verdicts["reason"] = (
            "initial state has zero overlap with the accessible operators "
            "(x0 = 0), so the readout is identically zero"
        )
        evidence["x0_norm"] = float(np.linalg.norm(b))
        evidence["max_response"] = float(np.max(np.abs(y)))
    elif capability == "ladder":
        _, obs_rank = realization.observability_rank(model, probe_float)
        expected_deficiency = 0 if run.n_chain % 2 == 0 else 1
        det_cm = realization.det_cm_exact(model, probe)
        det_closed = realization.det_cm_closed_form(run.n_chain, probe)
        minimal = realization.kalman_minimal(model, probe)
        scan = sta.identifiability_scan(
            config, trials=2, seed=run.seed, n_perturb=8
        )
        verdicts["identifiability"] = "identifiable-in-magnitude"
        verdicts["reason"] = (
            "sign flips of the unknown couplings are output-equivalent; "
            "magnitude changes are not"
        )
        evidence["observability_rank"] = obs_rank
        evidence["observability_deficiency"] = model.dim - obs_rank
        evidence["expected_deficiency"] = expected_deficiency
        evidence["det_cm_nonzero"] = det_cm != 0
        evidence["det_cm_matches_closed_form"] = det_cm == det_closed
        evidence["minimal_order"] = minimal.order
        evidence["scan_clean"] = scan.all_clean
        evidence["scan_trials"] = len(scan.trials)
        if obs_rank != model.dim - expected_deficiency or not scan.all_clean:
            verdicts["identifiability"] = "inconclusive"
            verdicts["reason"] = "structural evidence disagreed at the probe"
    elif run.n_chain <= 2:
        minimal = realization.kalman_minimal(model, probe)
        n = run.n_chain
        sym = symbolic_markov(model, 2 * n + 2)
        ring, linear, squared = estimate.cube_theta_ring(n)
        markov = exact_markov_sequence(model, probe, 2 * n + 2)
        equations = [
            square_substitute(sym[k], ring, linear, squared)
            - MPoly.const(ring, markov[k])
            for k in range(1, 2 * n + 2, 2)
        ]
        square_vars = tuple(v for v in ring.variables if v != "t1")
        solved = solve_identifiability(equations, square_vars=square_vars)
        verdicts["identifiability"] = (
            "identifiable" if solved.verdict == "unique" else "inconclusive"
        )
        verdicts["reason"] = (
            "odd Markov parameters determine the sensing coupling and every "
            "squared magnitude through a triangular elimination"
            if solved.verdict == "unique"
            else f"elimination verdict {solved.verdict!r} at the probe"
        )
        evidence["minimal_order"] = minimal.order
        evidence["elimination_verdict"] = solved.verdict
        if solved.verdict == "unique":
            theta = solved.solutions[0]
            recovered = {
                "ha": abs(float(theta["t1"])),
                "hb": float(theta["t2"]) ** 0.5,
            }
            for i in range(1, n):
                recovered[f"h{i}"] = float(theta[f"t{i + 2}"]) ** 0.5
            gap = max(
                abs(recovered[p] - abs(probe_float[p])) for p in recovered
            )
            evidence["probe_recovery_gap"] = gap
    else:
        verdicts["identifiability"] = "undecided"
        verdicts["reason"] = (
            "the elimination route for this scheme is established for "
            "chains of one or two spins only"
        )

    report = Report(
        command="analyze",
        scheme=_scheme_block(config),
        verdicts=verdicts,
        evidence=evidence,
        seed=run.seed,
        runtime_s=time.perf_counter() - started,
    )
    emit(report, run)
    return 0


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    if not run.h_values:
        raise InadmissibleConfig(
            "simulate needs ground-truth couplings: give a [truth] section "
            "or --set name=value flags"
        )
    config = run.sensor_config()
    model = ssm.build(config)
    missing = sorted(set(model.param_ids) - set(run.h_values))
    extra = sorted(set(run.h_values) - set(model.param_ids))
    if missing or extra:
        raise InadmissibleConfig(
            f"ground truth must bind exactly {', '.join(model.param_ids)}; "
            f"missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    dt = run.dt if run.dt is not None else auto_dt(config, run.h_values)
    record = estimate.simulate_record(
        config, run.h_values, dt, run.count,
        noise_sigma=run.noise_sigma, seed=run.seed,
    )
    path = run.record_path or "record.csv"
    estimate.save_record(record, path)
    if config.capability == "orthogonal":
        sys.stdout.write(
            "warning: this scheme reads out identically zero; the record "
            "carries no parameter information\n"
        )
    sys.stdout.write(
        f"wrote {record.count} samples to {path} "
        f"(scheme {record.scheme_tag}, dt {record.dt!r}, "
        f"noise {record.noise_sigma!r}, seed {record.seed})\n"
    )
    return 0


# -- estimate ----------------------------------------------------------------


def cmd_estimate(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    started = time.perf_counter()
    if not run.record_path:
        raise InadmissibleConfig("estimate needs --record pointing at a CSV")
    record = estimate.load_record(run.record_path)
    config = run.sensor_config()
    result = estimate.recover_parameters(record, config)
    verdicts = {
        "method": result.method,
        "realized_order": result.realization.order,
    }
    route = result.diagnostics.get("denominator_route")
    if route is not None:
        verdicts["denominator_route_agrees"] = bool(route["agrees"])
    estimates = {k: float(v) for k, v in sorted(result.magnitudes.items())}
    residuals: dict = {}
    if run.h_values:
        gaps = {
            k: abs(estimates[k] - abs(run.h_values[k]))
            for k in estimates
            if k in run.h_values
        }
        residuals = {f"abs_err_{k}": v for k, v in gaps.items()}
        if gaps:
            residuals["max_abs_err"] = max(gaps.values())
    report = Report(
        command="estimate",
        scheme=_scheme_block(config),
        verdicts=verdicts,
        estimates=estimates,
        residuals=residuals,
        evidence={
            "record_count": record.count,
            "record_noise_sigma": record.noise_sigma,
            "signed_first_coupling": result.diagnostics.get(
                "signed_first_coupling"
            ),
        },
        seed=run.seed,
        runtime_s=time.perf_counter() - started,
    )
    emit(report, run)
    return 0


# -- oracle-check ------------------------------------------------------------


def cmd_oracle_check(args: argparse.Namespace) -> int:
    run = build_run_config(args)
    started = time.perf_counter()
    config = run.sensor_config()
    model = ssm.build(config)
    rng = spawn_rng(run.seed, "oracle-check", config.scheme_tag,
                    str(run.n_chain))
    if run.h_values:
        binding = dict(run.h_values)
    else:
        binding = {
            k: float(v) for k, v in rational_binding(
                model.param_ids, rng
            ).items()
        }
    times = np.linspace(0.0, 10.0, 50)
    y_model = ssm.impulse_response(model, binding, times)
    y_quantum = estimate.exact_quantum_expectation(
        config.hamiltonian(), config.initial_state(),
        config.measurement_string(), binding, times,
    )
    oracle_residual = float(np.max(np.abs(y_model - y_quantum)))

    verdicts = {"oracle_agreement": oracle_residual <= 1e-8}
    residuals = {"oracle_max_residual": oracle_residual}
    evidence: dict = {"times_checked": len(times)}

    # closed-form cross-checks on the two-qubit ladder family
    ladder_checks = {}
    for n in (2, 3, 4, 5):
        ladder = SensorConfig(n, 2, "ZaYb", "xa")
        lmodel = ssm.build(ladder)
        lbind = rational_binding(
            lmodel.param_ids, spawn_rng(run.seed, "oracle-closed", str(n))
        )
        det = realization.det_cm_exact(lmodel, lbind)
        closed = realization.det_cm_closed_form(n, lbind)
        ladder_checks[f"det_cm_N{n}"] = det == closed
    for n in (3, 5):
        ladder = SensorConfig(n, 2, "ZaYb", "xa")
        lmodel = ssm.build(ladder)
        lbind = rational_binding(
            lmodel.param_ids, spawn_rng(run.seed, "oracle-spt", str(n))
        )
        _, artifacts = realization.spt_minimal(lmodel, lbind)
        closed = realization.det_p_bar_closed_form(n, lbind)
        ladder_checks[f"det_p_bar_N{n}"] = artifacts.det_p_bar == closed
    evidence.update(ladder_checks)
    verdicts["closed_forms_match"] = all(ladder_checks.values())

    report = Report(
        command="oracle-check",
        scheme=_scheme_block(config),
        verdicts=verdicts,
        residuals=residuals,
        evidence=evidence,
        seed=run.seed,
        runtime_s=time.perf_counter() - started,
    )
    emit(report, run)
    return 0


# -- report ------------------------------------------------------------------


def cmd_report(args: argparse.Namespace) -> int:
    try:
        with open(args.path) as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise InadmissibleConfig(f"report file {args.path!r} not found")
    except json.JSONDecodeError as err:
        raise InadmissibleConfig(
            f"report file {args.path!r} is not valid JSON: {err}"
        ) from None
    report = Report(
        command=payload.get("command", "?"),
        scheme=payload.get("scheme", {}),
        verdicts=payload.get("verdicts", {}),
        estimates=payload.get("estimates", {}),
        residuals=payload.get("residuals", {}),
        evidence=payload.get("evidence", {}),
        seed=payload.get("seed", 0),
    )
    sys.stdout.write(report.human_text())
    return 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainsense",
        description="identifiability analysis and estimation for "
                    "sensor-probed coupling chains",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value section file")
    common.add_argument("--n-chain", dest="n_chain", type=int)
    common.add_argument("--sensor-qubits", dest="sensor_qubits", type=int,
                        choices=(1, 2))
    common.add_argument("--measurement", help="measurement label, e.g. ZaYb")
    common.add_argument("--initial", help="initial-state label, e.g. xa")
    common.add_argument("--set", action="append", metavar="NAME=VALUE",
                        help="ground-truth coupling (repeatable)")
    common.add_argument("--known", help="comma list of known parameters")
    common.add_argument("--dt", type=float)
    common.add_argument("--count", type=int)
    common.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--record", help="record CSV path")
    common.add_argument("--report", help="machine-readable report path")

    p = sub.add_parser("analyze", parents=[common],
                       help="identifiability verdict with evidence")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("simulate", parents=[common],
                       help="write a sampled-record CSV")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("estimate", parents=[common],
                       help="recover coupling magnitudes from a record")
    p.set_defaults(func=cmd_estimate)
    p = sub.add_parser("oracle-check", parents=[common],
                       help="model-vs-quantum and closed-form residuals")
    p.set_defaults(func=cmd_oracle_check)
    p = sub.add_parser("report", help="render a saved machine report")
    p.add_argument("path")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InadmissibleConfig, OracleSizeLimit) as err:
        sys.stderr.write(f"error: {err}\n")
        return 2
    except UnidentifiableScheme as err:
        sys.stderr.write(f"refused: {err}\n")
        return 3
    except (NumericFailure, BudgetExceeded) as err:
        sys.stderr.write(f"numeric failure: {err}\n")
        return 4
    except ChainsenseError as err:
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Batch command line front end.

Subcommands:

* ``simulate``: run an experiment plan from a config file, write a trial log
  and a JSON report.
* ``audit``: recompute every composite statistic from a trial log alone and
  check the plus-four counting bound.
* ``check``: cyclicity and joint-extension feasibility of a scenario file.
* ``oracle``: closed-form singlet pair predictions for four planar angles.

Exit codes: 0 success (for check: scenario feasible), 1 invalid input,
2 I/O failure, 3 scenario infeasible.  The environment variable
BELLSIM_SEED overrides the configured seed and is echoed in the report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

from . import chsh
from .consistency import (
    MarginalMismatchError,
    ScenarioFormatError,
    SizeLimitError,
    chsh_facet_value,
    joint_feasibility,
    quantum_chsh_scenario,
    read_scenario,
    vorobev_cyclicity,
    witness_deviation,
)
from .core import (
    BLOCK_INDEX,
    MODE_COMMON_SPACE,
    MODES,
    PAIR_LABELS,
    ExperimentPlan,
    InvalidPlanError,
    dot,
    make_setting,
)
from .generators import run_common_space, run_instrument, run_per_pair
from .quantum import joint_pair_distribution

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_INFEASIBLE = 3

SEED_ENV_VAR = "BELLSIM_SEED"
LOG_HEADER = "trial_index,block,setting_pair,time_index,a_outcome,b_outcome"

_REQUIRED_KEYS = (
    "mode",
    "angle_a",
    "angle_b",
    "angle_c",
    "angle_d",
    "trials_per_pair",
    "seed",
    "log_path",
    "report_path",
)
_OPTIONAL_KEYS = ("check_feasibility", "threads")


class ConfigError(ValueError):
    """The run configuration file is malformed."""


class TrialLogError(ValueError):
    """A trial log does not follow the documented format."""


@dataclass(frozen=True)
class RunConfig:
    mode: str
    angle_a: float
    angle_b: float
    angle_c: float
    angle_d: float
    trials_per_pair: int
    seed: int
    log_path: str
    report_path: str
    check_feasibility: bool = False
    threads: int = 1
    seed_source: str = "config"


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; comments start with ``#``.

    Every required key must appear exactly once and unknown keys are
    rejected, so a config file round-trips losslessly into the report.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _REQUIRED_KEYS and key not in _OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not val:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[key] = val
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")

    def _float(key: str) -> float:
        try:
            return float(values[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None

    def _int(key: str, default: int | None = None) -> int:
        if key not in values:
            return default  # type: ignore[return-value]
        try:
            return int(values[key])
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from None

    mode = values["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    check = values.get("check_feasibility", "false").lower()
    if check not in ("true", "false"):
        raise ConfigError(f"check_feasibility must be true or false, got {values['check_feasibility']!r}")
    threads = _int("threads", 1)
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    return RunConfig(
        mode=mode,
        angle_a=_float("angle_a"),
        angle_b=_float("angle_b"),
        angle_c=_float("angle_c"),
        angle_d=_float("angle_d"),
        trials_per_pair=_int("trials_per_pair"),
        seed=_int("seed"),
        log_path=values["log_path"],
        report_path=values["report_path"],
        check_feasibility=check == "true",
        threads=threads,
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _plan_from_config(cfg: RunConfig) -> ExperimentPlan:
    return ExperimentPlan(
        a=make_setting(cfg.angle_a),
        b=make_setting(cfg.angle_b),
        c=make_setting(cfg.angle_c),
        d=make_setting(cfg.angle_d),
        trials_per_pair=cfg.trials_per_pair,
        seed=cfg.seed,
        mode=cfg.mode,
    )


def write_trial_log(path: str, records, mode: str) -> None:
    """One CSV line per station pair event; quadruples expand to four lines."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(LOG_HEADER + "\n")
        if mode == MODE_COMMON_SPACE:
            for r in records:
                k = r.trial_index
                fh.write(f"{k},0,AB,{k},{r.a_a},{r.b_b}\n")
                fh.write(f"{k},1,AC,{k},{r.a_a},{r.b_c}\n")
                fh.write(f"{k},2,DB,{k},{r.a_d},{r.b_b}\n")
                fh.write(f"{k},3,DC,{k},{r.a_d},{r.b_c}\n")
        else:
            for r in records:
                fh.write(
                    f"{r.trial_index},{r.pair.block},{r.pair.label},"
                    f"{r.time_index},{r.a_outcome},{r.b_outcome}\n"
                )


def read_trial_log(path: str) -> dict[str, list[tuple[int, int]]]:
    """Outcome pairs per block label, in file order.

    Raises TrialLogError naming the offending line for any malformed row.
    """
    blocks: dict[str, list[tuple[int, int]]] = {label: [] for label in PAIR_LABELS}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise TrialLogError("line 1: missing or wrong header row")
    rows = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise TrialLogError(f"line {lineno}: expected 6 fields, got {len(fields)}")
        try:
            trial = int(fields[0])
            block = int(fields[1])
            time_index = int(fields[3])
            a_val = int(fields[4])
            b_val = int(fields[5])
        except ValueError:
            raise TrialLogError(f"line {lineno}: non-integer field in {line!r}") from None
        label = fields[2]
        if label not in PAIR_LABELS:
            raise TrialLogError(f"line {lineno}: unknown setting pair {label!r}")
        if block != BLOCK_INDEX[label]:
            raise TrialLogError(f"line {lineno}: block {block} does not match pair {label}")
        if trial < 0 or time_index < 0:
            raise TrialLogError(f"line {lineno}: negative index")
        if a_val not in (-1, 1) or b_val not in (-1, 1):
            raise TrialLogError(f"line {lineno}: outcomes must be -1 or +1")
        blocks[label].append((a_val, b_val))
        rows += 1
    if rows == 0:
        raise TrialLogError("the log contains no data rows")
    return blocks


def _gamma_section(report: chsh.GammaReport) -> dict:
    audit = chsh.counting_bound_audit(report)
    s = report.stats
    return {
        "J": s.total,
        "mean_M": report.mean,
        "delta": report.excess,
        "counts": {
            "minus4": s.n_minus4,
            "minus2": s.n_minus2,
            "zero": s.n_zero,
            "plus2": s.n_plus2,
            "plus4": s.n_plus4,
        },
        "counting_bound": asdict(audit),
        "sign_convention": chsh.SIGN_CONVENTION_NOTE,
    }


def _pairs_section(stats: dict[str, chsh.PairStat], plan: ExperimentPlan) -> dict:
    out = {}
    for pid in plan.setting_pairs():
        st = stats[pid.label]
        d = dot(pid.station1_setting, pid.station2_setting)
        out[pid.label] = {
            "trials": st.count,
            "station_mean": st.station_mean,
            "a_side_mean": st.a_side_mean,
            "std_error": st.std_error,
            "oracle_station_expectation": -d,
            "oracle_a_side_expectation": d,
        }
    return out


def _feasibility_section(plan: ExperimentPlan) -> dict:
    scenario = quantum_chsh_scenario(plan.a, plan.b, plan.c, plan.d)
    cyc = vorobev_cyclicity(scenario.subsets(), scenario.variables)
    result = joint_feasibility(scenario)
    section = {
        "scenario": "quantum pair tables at the configured angles",
        "cyclicity": cyc,
        "feasible": result.feasible,
        "method": result.method,
    }
    if result.feasible:
        section["witness_deviation"] = witness_deviation(scenario, result.witness)
    else:
        section["certificate"] = {
            "label": result.certificate.label,
            "value": result.certificate.value,
            "bound": result.certificate.bound,
        }
    return section


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if SEED_ENV_VAR in os.environ:
        try:
            override = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            print(f"error: {SEED_ENV_VAR} must be an integer", file=sys.stderr)
            return EXIT_INVALID
        cfg = RunConfig(**{**asdict(cfg), "seed": override, "seed_source": "env"})

    try:
        plan = _plan_from_config(cfg)
    except (InvalidPlanError, ValueError) as exc:
        print(f"error: invalid plan: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if cfg.mode == MODE_COMMON_SPACE:
        records = run_common_space(plan)
        gammas, report = chsh.gamma_common(records)
        stats = chsh.pair_statistics_from_quadruples(records)
    else:
        runner = run_per_pair if cfg.mode == "per-pair" else run_instrument
        records = runner(plan, max_workers=cfg.threads)
        gammas = chsh.gamma_from_trials(records)
        report = chsh.gamma_report(gammas)
        stats = chsh.pair_statistics(records)

    try:
        write_trial_log(cfg.log_path, records, cfg.mode)
    except OSError as exc:
        print(f"error: cannot write trial log: {exc}", file=sys.stderr)
        return EXIT_IO

    doc = {
        "config": {**asdict(cfg)},
        "pairs": _pairs_section(stats, plan),
        "gamma": _gamma_section(report),
        "oracle": {
            "chsh_facet_value": chsh_facet_value(
                dot(plan.a, plan.b), dot(plan.a, plan.c), dot(plan.d, plan.b), dot(plan.d, plan.c)
            )
        },
    }
    if cfg.check_feasibility:
        doc["feasibility"] = _feasibility_section(plan)

    try:
        with open(cfg.report_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO

    print(
        f"{cfg.mode}: J={plan.trials_per_pair} M={report.mean:.6f} "
        f"delta={report.excess:+.6f} log={cfg.log_path} report={cfg.report_path}"
    )
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        blocks = read_trial_log(args.log)
    except OSError as exc:
        print(f"error: cannot read log: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TrialLogError as exc:
        print(f"error: bad trial log: {exc}", file=sys.stderr)
        return EXIT_INVALID

    products = {
        label: [chsh.a_side_product(a, b) for a, b in blocks[label]] for label in PAIR_LABELS
    }
    try:
        gammas = chsh.gamma_from_products(
            products["AB"], products["AC"], products["DB"], products["DC"]
        )
        report = chsh.gamma_report(gammas)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    doc = {
        "log_path": args.log,
        "rows": sum(len(v) for v in blocks.values()),
        "gamma": _gamma_section(report),
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.report:
        try:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    try:
        scenario = read_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MarginalMismatchError as exc:
        print(f"error: inconsistent marginals: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ScenarioFormatError, SizeLimitError, ValueError) as exc:
        print(f"error: bad scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID

    cyclicity = vorobev_cyclicity(scenario.subsets(), scenario.variables)
    result = joint_feasibility(scenario)

    print(f"variables: {' '.join(scenario.variables)}")
    print(f"constraints: {len(scenario.constraints)}")
    print(f"cyclicity: {cyclicity}")
    print(f"feasible: {'yes' if result.feasible else 'no'}")
    print(f"method: {result.method}")
    doc = {
        "scenario_path": args.scenario,
        "variables": list(scenario.variables),
        "cyclicity": cyclicity,
        "feasible": result.feasible,
        "method": result.method,
    }
    if result.feasible:
        dev = witness_deviation(scenario, result.witness)
        support = int((result.witness > 1e-12).sum())
        print(f"witness: {support} atoms with positive mass, max marginal deviation {dev:.3g}")
        doc["witness"] = {
            "atoms": result.witness.tolist(),
            "support": support,
            "max_marginal_deviation": dev,
        }
    else:
        cert = result.certificate
        print(
            f"certificate: {cert.label} value={cert.value:.6f} bound={cert.bound:.6f} "
            f"margin={cert.value - cert.bound:.6f}"
        )
        doc["certificate"] = {
            "label": cert.label,
            "value": cert.value,
            "bound": cert.bound,
            "constant": cert.constant,
            "coefficients": [c.reshape(-1).tolist() for c in cert.coefficients],
        }
    if args.report:
        try:
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        settings = {
            "a": make_setting(args.a),
            "b": make_setting(args.b),
            "c": make_setting(args.c),
            "d": make_setting(args.d),
        }
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    pairs = [("AB", "a", "b"), ("AC", "a", "c"), ("DB", "d", "b"), ("DC", "d", "c")]
    dots = {}
    for label, s1, s2 in pairs:
        dist = joint_pair_distribution(settings[s1], settings[s2])
        d = dist.product_expectation()
        dots[label] = dot(settings[s1], settings[s2])
        cells = dist.as_array()
        station = dist.station_array()
        print(f"pair {label} ({s1}, {s2}):")
        print(f"  a_side_expectation  {d:+.9f}")
        print(f"  station_expectation {-dots[label]:+.9f}")
        print(f"  a_side cells   [--, -+, +-, ++] = "
              f"{cells[0,0]:.9f} {cells[0,1]:.9f} {cells[1,0]:.9f} {cells[1,1]:.9f}")
        print(f"  station cells  [--, -+, +-, ++] = "
              f"{station[0,0]:.9f} {station[0,1]:.9f} {station[1,0]:.9f} {station[1,1]:.9f}")
    facet = chsh_facet_value(dots["AB"], dots["AC"], dots["DB"], dots["DC"])
    print(f"chsh_facet_value: {facet:+.9f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellsim",
        description="Simulate two-station spin-pair experiments and verify their statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a plan from a config file")
    p_sim.add_argument("--config", required=True, help="path to the run config file")
    p_sim.set_defaults(fn=cmd_simulate)

    p_audit = sub.add_parser("audit", help="recompute statistics from a trial log")
    p_audit.add_argument("log", help="path to a trial log")
    p_audit.add_argument("--report", help="also write the audit report to this path")
    p_audit.set_defaults(fn=cmd_audit)

    p_check = sub.add_parser("check", help="cyclicity and feasibility of a scenario file")
    p_check.add_argument("scenario", help="path to a scenario file")
    p_check.add_argument("--report", help="also write the check report to this path")
    p_check.set_defaults(fn=cmd_check)

    p_oracle = sub.add_parser("oracle", help="closed-form pair predictions for four angles")
    p_oracle.add_argument("--a", type=float, required=True, help="station-1 angle a in degrees")
    p_oracle.add_argument("--b", type=float, required=True, help="station-2 angle b in degrees")
    p_oracle.add_argument("--c", type=float, required=True, help="station-2 angle c in degrees")
    p_oracle.add_argument("--d", type=float, required=True, help="station-1 angle d in degrees")
    p_oracle.set_defaults(fn=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

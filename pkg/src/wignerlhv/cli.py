"""Command-line entry point.

    wignerlhv validate    oracle vs simulation table; exit 1 on any failure
    wignerlhv bell        E values and S per chi (CSV + JSON)
    wignerlhv sweep       S and negative-rate fractions across a chi grid
    wignerlhv positivity  negative-rate fractions per rate
    wignerlhv sample-dump raw hidden variables and derived realities

Exit codes: 0 success, 1 analysis/validation or I/O failure, 2 usage/config error.
Worker threads default to the CPU count; ``WIGNERLHV_WORKERS`` overrides it.
Outputs never depend on the worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic_oracle as oracle
from .bell_analysis import (
    bell_S_multi,
    correlation_E,
    positivity_report,
    run_pair,
    sign_bell_S,
    sweep_chi,
)
from .config import KEYS, ExperimentConfig, load_config
from .errors import CapacityError, ConfigError, DegenerateDenominator
from .gaussian_core import (
    build_covariance,
    exact_second_moments,
    iter_sample_blocks,
    real_components,
    sample_batch,
)
from .lhv_model import RATE_NAMES, AnalyzerSettings, Representation, count_rates, dark_noise_rates, quadrature_realities
from .rng import RandomStream

BELL_COLUMNS = (
    "chi", "theta_a", "theta_a_prime", "theta_b", "theta_b_prime", "representation",
    "E_ab", "E_abp", "E_apb", "E_apbp", "S", "stderr_S", "n", "seed", "status",
)  # fmt: skip
SWEEP_COLUMNS = (
    "chi", "representation", "S", "stderr_S", "oracle_S",
    *(f"neg_frac_{r}" for r in RATE_NAMES), "n", "seed", "status",
)  # fmt: skip
POSITIVITY_COLUMNS = ("chi", "representation", "rate", "negative_fraction", "stderr", "oracle", "n", "seed")
VALIDATE_COLUMNS = ("check", "chi", "oracle", "estimate", "stderr", "z", "tolerance", "status")


def fmt(value) -> str:
    """CSV cell: 17 significant digits for floats, blank for missing."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"refusing to write non-finite value {value}")
        return format(float(value), ".17g")
    return str(value)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit_csv(path: Path | None, columns, rows) -> None:
    text = _csv_text(columns, rows)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _json_clean(value):
    if isinstance(value, dict):
        return {k: _json_clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_clean(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _emit_json(path: Path | None, payload: dict) -> None:
    if path is not None:
        path.write_text(json.dumps(_json_clean(payload), indent=2, sort_keys=True) + "\n")


def _pair_settings(config: ExperimentConfig) -> AnalyzerSettings:
    a, _, b, _ = config.angles.as_tuple()
    return AnalyzerSettings(a, b)


def cmd_bell(config: ExperimentConfig, workers: int | None = None) -> int:
    config.require_error_bars()
    rows = sweep_chi(
        config.chis, config.angles, config.representation, config.samples,
        RandomStream(config.seed), config.chunks, config.epsilon, workers,
    )  # fmt: skip
    csv_rows, summary = [], []
    for row in rows:
        base = dict(zip(BELL_COLUMNS[:5], (row.chi, *config.angles.as_tuple())))
        base.update(representation=config.representation.value, n=config.samples, seed=config.seed, status=row.status)
        entry = dict(base)
        try:
            oracle_es = [oracle.oracle_correlation_E(row.chi, s.theta_a - s.theta_b) for s in config.angles.pairs()]
            entry["oracle_E"] = oracle_es
            entry["oracle_S"] = oracle.oracle_bell_S(row.chi, config.angles)
        except DegenerateDenominator:
            entry["oracle_status"] = "DegenerateDenominator"
        est = row.estimate
        if est is not None:
            base.update(zip(("E_ab", "E_abp", "E_apb", "E_apbp"), est.e_values))
            base.update(S=est.s_value, stderr_S=est.s_stderr)
            entry.update(base)
            entry["stderr_E"] = list(est.e_stderr)
            entry["negative_fractions"] = dict(zip(RATE_NAMES, est.negative_fractions))
            if "oracle_S" in entry:
                entry["deviation_S"] = est.s_value - entry["oracle_S"]
                entry["deviation_S_sigma"] = entry["deviation_S"] / est.s_stderr
                entry["deviation_E"] = [e - o for e, o in zip(est.e_values, entry["oracle_E"])]
        csv_rows.append(base)
        summary.append(entry)
    _emit_csv(config.out_csv, BELL_COLUMNS, csv_rows)
    _emit_json(config.out_json, {"command": "bell", "config": config.to_dict(), "rows": summary})
    return 0


def cmd_sweep(config: ExperimentConfig, workers: int | None = None) -> int:
    config.require_error_bars()
    rows = sweep_chi(
        config.chis, config.angles, config.representation, config.samples,
        RandomStream(config.seed), config.chunks, config.epsilon, workers,
    )  # fmt: skip
    out = []
    for row in rows:
        rec = {"chi": row.chi, "representation": config.representation.value, "n": config.samples,
               "seed": config.seed, "status": row.status}  # fmt: skip
        try:
            rec["oracle_S"] = oracle.oracle_bell_S(row.chi, config.angles)
        except DegenerateDenominator:
            pass
        if row.estimate is not None:
            rec.update(S=row.estimate.s_value, stderr_S=row.estimate.s_stderr)
            rec.update({f"neg_frac_{r}": f for r, f in zip(RATE_NAMES, row.estimate.negative_fractions)})
        out.append(rec)
    _emit_csv(config.out_csv, SWEEP_COLUMNS, out)
    s_rows = [(r["chi"], r["S"]) for r in out if "S" in r]
    crossing = None
    for (c0, s0), (c1, s1) in zip(s_rows, s_rows[1:]):
        if (s0 - 2.0) * (s1 - 2.0) < 0:
            crossing = [c0, c1]
            break
    _emit_json(
        config.out_json,
        {"command": "sweep", "config": config.to_dict(), "rows": out, "s_equals_2_bracket": crossing,
         "oracle_crossing_chi": oracle.crossing_chi()},
    )  # fmt: skip
    return 0


def cmd_positivity(config: ExperimentConfig, workers: int | None = None) -> int:
    if config.samples < config.chunks:
        raise ConfigError(f"samples ({config.samples}) must be >= chunks ({config.chunks})")
    settings = _pair_settings(config)
    stream = RandomStream(config.seed)
    rows = []
    for i, chi in enumerate(config.chis):
        rep = positivity_report(
            build_covariance(chi), settings, config.representation, config.samples,
            stream.offset(i), config.chunks, workers,
        )  # fmt: skip
        expected = oracle.oracle_negative_fraction(chi, config.representation)
        for name in RATE_NAMES:
            rows.append({
                "chi": chi, "representation": config.representation.value, "rate": name,
                "negative_fraction": rep.fractions[name], "stderr": rep.stderr[name],
                "oracle": expected, "n": rep.n, "seed": config.seed,
            })  # fmt: skip
    _emit_csv(config.out_csv, POSITIVITY_COLUMNS, rows)
    _emit_json(config.out_json, {"command": "positivity", "config": config.to_dict(), "rows": rows})
    return 0


def dump_columns() -> tuple[str, ...]:
    cols = ["index"]
    cols += [f"{part}_e{k}" for k in range(1, 7) for part in ("re", "im")]
    for name in ("x_a_plus", "x_a_minus", "x_b_plus", "x_b_minus", "x_va", "x_vb"):
        cols += [f"{name}_1", f"{name}_2"]
    cols += list(RATE_NAMES)
    return tuple(cols)


def cmd_sample_dump(config: ExperimentConfig, workers: int | None = None) -> int:
    if config.samples > config.dump_cap:
        raise CapacityError(f"sample-dump of {config.samples} rows exceeds dump_cap = {config.dump_cap}")
    samples = sample_batch(build_covariance(config.chi), RandomStream(config.seed), config.samples)
    settings = _pair_settings(config)
    q = quadrature_realities(samples, settings)
    rates = count_rates(samples, settings, config.representation)
    table = np.column_stack(
        [real_components(samples)]
        + [getattr(q, f) for f in ("x_a_plus", "x_a_minus", "x_b_plus", "x_b_minus", "x_va", "x_vb")]
        + [r[:, None] for r in rates.as_tuple()]
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dump_columns())
    for i, row in enumerate(table):
        writer.writerow([str(i)] + [fmt(float(v)) for v in row])
    if config.out_csv is None:
        sys.stdout.write(buf.getvalue())
    else:
        config.out_csv.write_text(buf.getvalue())
    return 0


@dataclass
class Check:
    check: str
    chi: float
    oracle: float | None
    estimate: float | None
    stderr: float | None
    tolerance: float
    status: str = ""
    kind: str = "two-sided"

    def __post_init__(self):
        if self.status:
            return
        if self.kind == "upper":
            ok = self.estimate <= self.oracle + self.tolerance * self.stderr
        elif self.stderr == 0:
            ok = self.estimate == self.oracle
        else:
            ok = abs(self.estimate - self.oracle) <= self.tolerance * self.stderr
        self.status = "pass" if ok else "fail"

    @property
    def z(self) -> float | None:
        if self.estimate is None or self.oracle is None or not self.stderr:
            return None
        return (self.estimate - self.oracle) / self.stderr

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "expected-pass")

    def row(self) -> dict:
        return {"check": self.check, "chi": self.chi, "oracle": self.oracle, "estimate": self.estimate,
                "stderr": self.stderr, "z": self.z, "tolerance": self.tolerance, "status": self.status}  # fmt: skip


def _moment_checks(model, stream, n, tol) -> list[Check]:
    """Max |z| over the 78 distinct real covariances, plus dark-noise and rate means."""
    s1 = np.zeros((12, 12))
    s2 = np.zeros((12, 12))
    for e in iter_sample_blocks(model, stream, n):
        x = real_components(e)
        s1 += np.einsum("ni,nj->ij", x, x, optimize=False)
        x2 = x * x
        s2 += np.einsum("ni,nj->ij", x2, x2, optimize=False)
    mean = s1 / n
    se = np.sqrt(np.maximum(s2 / n - mean**2, 0.0) / (n - 1))
    exact = exact_second_moments(model).real_covariance
    iu = np.triu_indices(12)
    z = np.abs(mean - exact)[iu] / se[iu]
    k = int(np.argmax(z))
    i, j = iu[0][k], iu[1][k]
    worst = Check(f"second_moment[{i},{j}] (worst of 78)", model.chi, exact[i, j], mean[i, j], se[i, j], tol)
    return [worst]


def _validate_chi(config: ExperimentConfig, chi: float, stream: RandomStream, workers) -> list[Check]:
    tol, n, rep = config.tolerance, config.samples, config.representation
    model = build_covariance(chi)
    checks = _moment_checks(model, stream.child(0), n, tol)

    settings = _pair_settings(config)
    accs = run_pair(model, settings, [Representation.EQ3, Representation.EQ4], n, stream.child(1), config.chunks, workers)
    for r, acc in accs.items():
        rates = acc.rate_sums / acc.n
        # per-chunk batch means for the mean-rate error
        per_chunk = np.array([c.sums()[8] / c.n for c in acc.chunks])
        se = per_chunk.std(ddof=1) / math.sqrt(len(per_chunk))
        checks.append(Check(f"mean_rate r_a_plus {r.value}", chi, oracle.oracle_mean_rate(chi, r), rates[0], se, tol))
        frac = acc.negative_fractions()[0]
        checks.append(Check(
            f"negative_fraction r_a_plus {r.value}", chi, oracle.oracle_negative_fraction(chi, r), frac,
            math.sqrt(frac * (1 - frac) / acc.n), tol,
        ))  # fmt: skip

    dark = np.concatenate([dark_noise_rates(e).r_a_plus for e in iter_sample_blocks(model, stream.child(2), n)])
    checks.append(Check("dark_noise_mean", chi, oracle.oracle_dark_noise_mean(), dark.mean(), dark.std(ddof=1) / math.sqrt(n), tol))

    for k, delta in enumerate((0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8)):
        name = f"correlation_E {rep.value} delta={delta:.6f}"
        try:
            expected = oracle.oracle_correlation_E(chi, delta)
        except DegenerateDenominator:
            checks.append(Check(name, chi, None, None, None, tol, status="expected-pass"))
            continue
        acc = run_pair(model, AnalyzerSettings(delta, 0.0), [rep], n, stream.child(3).child(k), config.chunks, workers)[rep]
        try:
            e, se = correlation_E(acc, config.epsilon)
        except DegenerateDenominator:
            checks.append(Check(name, chi, expected, None, None, tol, status="fail"))
            continue
        checks.append(Check(name, chi, expected, e, se, tol))

    name = f"bell_S {rep.value}"
    try:
        expected = oracle.oracle_bell_S(chi, config.angles)
    except DegenerateDenominator:
        checks.append(Check(name, chi, None, None, None, tol, status="expected-pass"))
    else:
        est = bell_S_multi(model, config.angles, [rep], n, stream.child(4), config.chunks, config.epsilon, workers)[rep]
        checks.append(Check(name, chi, expected, est.s_value, est.s_stderr, tol))

    sign = sign_bell_S(model, config.angles, n, stream.child(5), config.chunks, workers)
    checks.append(Check("sign_S vs oracle", chi, oracle.oracle_sign_bell_S(chi, config.angles), sign.s_value, sign.s_stderr, tol))
    checks.append(Check("sign_S <= 2", chi, 2.0, abs(sign.s_value), sign.s_stderr, tol, kind="upper"))
    return checks


def cmd_validate(config: ExperimentConfig, workers: int | None = None) -> int:
    config.require_error_bars()
    stream = RandomStream(config.seed)
    checks = []
    for i, chi in enumerate(config.chis):
        checks += _validate_chi(config, chi, stream.offset(i), workers)
    rows = [c.row() for c in checks]
    width = max(len(c.check) for c in checks)
    for c in checks:
        z = "" if c.z is None else f"z={c.z:+.2f}"
        print(f"{c.status:13s} chi={c.chi:<8g} {c.check:{width}s} {z}")
    if config.out_csv is not None:
        _emit_csv(config.out_csv, VALIDATE_COLUMNS, rows)
    _emit_json(config.out_json, {"command": "validate", "config": config.to_dict(), "rows": rows,
                                 "all_passed": all(c.passed for c in checks)})  # fmt: skip
    return 0 if all(c.passed for c in checks) else 1


COMMANDS = {
    "validate": cmd_validate,
    "bell": cmd_bell,
    "sweep": cmd_sweep,
    "positivity": cmd_positivity,
    "sample-dump": cmd_sample_dump,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--chi")
    common.add_argument("--chi-grid", help="comma-separated chi values")
    common.add_argument("--angles", help="theta_a,theta_a',theta_b,theta_b' (radians, 'deg' suffix or pi/8 form)")
    common.add_argument("--representation", choices=[r.value for r in Representation])
    common.add_argument("--samples", help="samples per analyzer pair")
    common.add_argument("--seed")
    common.add_argument("--chunks")
    common.add_argument("--out-csv")
    common.add_argument("--out-json")
    common.add_argument("--epsilon")
    common.add_argument("--tolerance", help="validate tolerance in standard errors")
    common.add_argument("--dump-cap")
    parser = argparse.ArgumentParser(prog="wignerlhv", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}
    try:
        config = load_config(args.config, overrides)
        return COMMANDS[args.command](config)
    except (ConfigError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

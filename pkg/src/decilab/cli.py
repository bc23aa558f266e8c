"""Batch front-end: config parsing, experiment orchestration, CSV emission.

Experiments are described by a line-oriented ``key = value`` file with
sections (configparser syntax); command-line flags override config keys.
Every numeric output row carries a 12-hex digest of the effective
configuration, so re-running a digest reproduces its rows byte for byte.
Floats are emitted with 17 significant digits, UTF-8, LF line endings.

Exit codes: 0 success, 2 configuration error, 3 hypothesis-gate rejection
(a requested window whose decay cannot support the estimator theory).

Config schema (sections and keys; unknown keys are rejected):

  [experiment]  command (optional, must match the subcommand), seed, out
  [family]      type = bspline_ma | two_frequency | files
                order, gammas, modulation          (built-in types)
                decay, limit_freqs, threshold,
                gamma.<j>, kernels.<j>, freqs.<j>  (type = files)
  [noise]       distribution = gaussian | rademacher | scaled_uniform
  [run]         level, n, replicates, centering, levels
  [specdens]    window_order, gamma, gammas, input | synth, phi, n
  [tolerances]  rate_threshold
"""

import argparse
import configparser
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import montecarlo, moments, simulate, specdens
from .kernels import DecimatedFamily, FamilyLevel, make_scaled_window_family, read_kernel, two_frequency_demo_family
from .windows import make_bspline_window

FLOAT_FMT = "%.17g"

_KNOWN_KEYS = {
    "experiment": {"command", "seed", "out"},
    "family": {"type", "order", "gammas", "modulation", "decay", "limit_freqs", "threshold"},
    "noise": {"distribution"},
    "run": {"level", "n", "replicates", "centering", "levels"},
    "specdens": {"window_order", "gamma", "gammas", "input", "synth", "phi", "n"},
    "tolerances": {"rate_threshold"},
}


class ConfigError(Exception):
    pass


class HypothesisGateError(Exception):
    pass


def _parse_config_file(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(cfg_path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for section in parser.sections():
        base = section.split(".")[0]
        if base not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if base == "family" and "." in key:
                stem = key.split(".")[0]
                if stem not in {"gamma", "kernels", "freqs"}:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
            elif key not in _KNOWN_KEYS[base]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    return parser


def _effective_items(parser, command, seed, out_dir):
    items = [("experiment.command", command), ("experiment.seed", str(seed))]
    for section in sorted(parser.sections()):
        for key in sorted(parser[section]):
            if (section, key) in (("experiment", "seed"), ("experiment", "out"), ("experiment", "command")):
                continue
            items.append((f"{section}.{key}", parser[section][key]))
    return items


def config_digest(parser, command, seed, out_dir):
    text = "\n".join(f"{k}={v}" for k, v in _effective_items(parser, command, seed, out_dir))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _get(parser, section, key, default=None, required=False):
    if parser.has_option(section, key):
        return parser.get(section, key)
    if required:
        raise ConfigError(f"missing required key {key!r} in section [{section}]")
    return default


def _get_int(parser, section, key, default=None, required=False):
    raw = _get(parser, section, key, None, required)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from exc


def _get_float(parser, section, key, default=None, required=False):
    raw = _get(parser, section, key, None, required)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _get_values(parser, section, key, kind=float, default=None, required=False):
    raw = _get(parser, section, key, None, required)
    if raw is None:
        return default
    try:
        return [kind(tok) for tok in raw.split()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a list of {kind.__name__}") from exc


def _family_from_config(parser, config_dir):
    ftype = _get(parser, "family", "type", required=True)
    if ftype in ("bspline_ma", "two_frequency"):
        order = _get_int(parser, "family", "order", 4)
        gammas = _get_values(parser, "family", "gammas", int, required=True)
        if any(g % 2 for g in gammas):
            raise ConfigError("family gammas must be even")
        try:
            window = make_bspline_window(order)
            if ftype == "bspline_ma":
                modulation = _get_float(parser, "family", "modulation", 0.0)
                return make_scaled_window_family(window, gammas, modulation)
            return two_frequency_demo_family(window, gammas)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if ftype == "files":
        decay = _get_float(parser, "family", "decay", required=True)
        limit_freqs = _get_values(parser, "family", "limit_freqs", float, required=True)
        threshold = _get_int(parser, "family", "threshold", 0)
        levels = []
        j = 0
        while parser.has_option("family", f"gamma.{j}"):
            gamma = _get_int(parser, "family", f"gamma.{j}", required=True)
            paths = _get(parser, "family", f"kernels.{j}", required=True).split()
            freqs = _get_values(parser, "family", f"freqs.{j}", float, required=True)
            kernels = []
            for rel in paths:
                kpath = (config_dir / rel).resolve()
                if not kpath.is_file():
                    raise ConfigError(f"kernel file not found: {rel}")
                kernels.append(read_kernel(kpath))
            levels.append(FamilyLevel(gamma=gamma, kernels=tuple(kernels), center_freqs=np.array(freqs)))
            j += 1
        if not levels:
            raise ConfigError("family type 'files' needs at least one gamma.<j> level")
        try:
            return DecimatedFamily(
                levels=tuple(levels),
                limit_freqs=np.array(limit_freqs),
                decay=decay,
                threshold=threshold,
                name="files",
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown family type {ftype!r}")


def _noise_from_config(parser):
    dist = _get(parser, "noise", "distribution", "gaussian")
    try:
        return simulate.NoiseSpec(dist)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _window_from_config(parser):
    order = _get_int(parser, "specdens", "window_order", 4)
    if order <= 2:
        raise HypothesisGateError(
            f"window order {order} gives decay <= 2: outside estimator hypotheses"
        )
    return make_bspline_window(order)


def _series_from_config(parser, config_dir, seed):
    input_path = _get(parser, "specdens", "input")
    synth = _get(parser, "specdens", "synth")
    if (input_path is None) == (synth is None):
        raise ConfigError("specdens needs exactly one of 'input' or 'synth'")
    if input_path is not None:
        path = (config_dir / input_path).resolve()
        if not path.is_file():
            raise ConfigError(f"input series not found: {input_path}")
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                tok = line.strip()
                if not tok:
                    continue
                try:
                    rows.append(float(tok))
                except ValueError:
                    if line_no == 1:
                        continue  # tolerate a header line
                    raise ConfigError(f"{input_path}:{line_no}: not a number: {tok!r}")
        if not rows:
            raise ConfigError(f"input series is empty: {input_path}")
        return np.asarray(rows), None
    n = _get_int(parser, "specdens", "n", required=True)
    noise = _noise_from_config(parser)
    if synth == "white":
        return simulate.draw_noise(noise, n, seed), 1.0 / (2.0 * np.pi)
    if synth == "ar1":
        phi = _get_float(parser, "specdens", "phi", 0.5)
        kernel = simulate.ar1_kernel(phi)
        target = 1.0 / (2.0 * np.pi * (1.0 - phi) ** 2)
        return simulate.simulate_linear_process(kernel, n, noise, seed), target
    raise ConfigError(f"unknown synthetic source {synth!r}")


def _open_out(out_dir, name):
    out_dir.mkdir(parents=True, exist_ok=True)
    return open(out_dir / name, "w", encoding="utf-8", newline="\n")


def _write_report(out_dir, name, pairs):
    with _open_out(out_dir, name) as fh:
        for key, value in pairs:
            if isinstance(value, float):
                value = FLOAT_FMT % value
            fh.write(f"{key} = {value}\n")


def _cmd_gamma(parser, out_dir, seed, digest, config_dir):
    family = _family_from_config(parser, config_dir)
    if family.limit_responses is None:
        raise ConfigError("gamma command needs a family with limit responses (built-in types)")
    gm = moments.gamma_matrix(family)
    with _open_out(out_dir, "gamma_matrix.csv") as fh:
        fh.write("entry_i,entry_ip,constant,value,digest\n")
        for i in range(family.n_branches):
            for ip in range(family.n_branches):
                fh.write(f"{i + 1},{ip + 1},{gm.constants[i, ip]},"
                         f"{FLOAT_FMT % gm.entries[i, ip]},{digest}\n")
    with _open_out(out_dir, "gamma_truncation.csv") as fh:
        fh.write("entry_i,entry_ip,truncation_bound,digest\n")
        for i in range(family.n_branches):
            for ip in range(family.n_branches):
                fh.write(f"{i + 1},{ip + 1},{FLOAT_FMT % gm.truncation_bounds[i, ip]},{digest}\n")
    return 0


def _cmd_simulate(parser, out_dir, seed, digest, config_dir):
    family = _family_from_config(parser, config_dir)
    noise = _noise_from_config(parser)
    level = _get_int(parser, "run", "level", 0)
    n = _get_int(parser, "run", "n", required=True)
    pm = simulate.simulate_decimated(family, level, n, noise, seed)
    with _open_out(out_dir, "path.csv") as fh:
        simulate.write_path_csv(pm, fh, digest=digest, float_format=FLOAT_FMT)
    return 0


def _run_replicates(parser, config_dir, seed):
    family = _family_from_config(parser, config_dir)
    noise = _noise_from_config(parser)
    level = _get_int(parser, "run", "level", 0)
    n = _get_int(parser, "run", "n", required=True)
    reps = _get_int(parser, "run", "replicates", required=True)
    if reps < 1:
        raise ConfigError("need replicates >= 1")
    centering = _get(parser, "run", "centering", "exact")
    return family, noise, level, n, reps, centering


def _cmd_clt(parser, out_dir, seed, digest, config_dir):
    family, noise, level, n, reps, centering = _run_replicates(parser, config_dir, seed)
    rs = montecarlo.replicate_sums(family, level, n, noise, reps, seed, centering)
    with _open_out(out_dir, "replicates.csv") as fh:
        montecarlo.write_replicates_csv(rs, fh, digest=digest, float_format=FLOAT_FMT)
    pairs = [("digest", digest), ("replicates", rs.n_replicates), ("centering", centering)]
    for i in range(rs.n_branches):
        rep = montecarlo.normality_report(rs, coordinate=i)
        prefix = f"coord_{i + 1}"
        pairs += [
            (f"{prefix}.skewness", rep.skewness),
            (f"{prefix}.excess_kurtosis", rep.excess_kurtosis),
            (f"{prefix}.ks_distance", rep.ks_distance),
            (f"{prefix}.degenerate", rep.degenerate),
        ]
    _write_report(out_dir, "normality.txt", pairs)
    return 0


def _cmd_cov_check(parser, out_dir, seed, digest, config_dir):
    family, noise, level, n, reps, centering = _run_replicates(parser, config_dir, seed)
    rows = montecarlo.convergence_sweep(family, [level], n, noise, reps, seed, centering)
    with _open_out(out_dir, "cov_check.csv") as fh:
        montecarlo.write_sweep_csv(rows, fh, digest=digest, float_format=FLOAT_FMT)
    return 0


def _cmd_sweep(parser, out_dir, seed, digest, config_dir):
    family, noise, _, n, reps, centering = _run_replicates(parser, config_dir, seed)
    levels = _get_values(parser, "run", "levels", int)
    if levels is None:
        levels = list(range(family.n_levels))
    rows = montecarlo.convergence_sweep(family, levels, n, noise, reps, seed, centering)
    with _open_out(out_dir, "sweep.csv") as fh:
        montecarlo.write_sweep_csv(rows, fh, digest=digest, float_format=FLOAT_FMT)
    return 0


def _cmd_specdens(parser, out_dir, seed, digest, config_dir):
    window = _window_from_config(parser)
    threshold = _get_float(parser, "tolerances", "rate_threshold", specdens.DEFAULT_RATE_THRESHOLD)
    series, target = _series_from_config(parser, config_dir, seed)
    gammas = _get_values(parser, "specdens", "gammas", int)
    gamma = _get_int(parser, "specdens", "gamma", gammas[-1] if gammas else None, required=gammas is None)
    est = specdens.estimate_f0(series, window, gamma, rate_threshold=threshold)
    pairs = [
        ("digest", digest),
        ("f0_hat", est.f0_hat),
        ("n", est.n),
        ("gamma", est.gamma),
        ("n_j", est.n_j),
        ("sigma2", est.sigma2),
        ("se", est.se),
        ("bias_order", est.bias_order),
        ("rate_value", est.rate_value),
        ("rate_ok", est.rate_ok),
        ("degenerate", est.degenerate),
    ]
    if target is not None:
        pairs.append(("target_f0", target))
    _write_report(out_dir, "specdens_report.txt", pairs)
    if gammas:
        with _open_out(out_dir, "specdens_sweep.csv") as fh:
            fh.write("gamma,f0_hat,se,rate_value,digest\n")
            for g in gammas:
                row = specdens.estimate_f0(series, window, g, rate_threshold=threshold)
                fh.write(f"{g},{FLOAT_FMT % row.f0_hat},{FLOAT_FMT % row.se},"
                         f"{FLOAT_FMT % row.rate_value},{digest}\n")
    return 0


_COMMANDS = {
    "gamma": _cmd_gamma,
    "simulate": _cmd_simulate,
    "cov-check": _cmd_cov_check,
    "clt": _cmd_clt,
    "specdens": _cmd_specdens,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="decilab",
        description="experiments on decimated linear processes and spectral estimation",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
    args = ap.parse_args(argv)

    try:
        parser = _parse_config_file(args.config)
        declared = _get(parser, "experiment", "command")
        if declared is not None and declared != args.command:
            raise ConfigError(f"config declares command {declared!r} but {args.command!r} was invoked")
        seed = args.seed if args.seed is not None else _get_int(parser, "experiment", "seed", 0)
        out_dir = Path(args.out if args.out is not None else _get(parser, "experiment", "out", "."))
        digest = config_digest(parser, args.command, seed, out_dir)
        config_dir = Path(args.config).resolve().parent
        return _COMMANDS[args.command](parser, out_dir, seed, digest, config_dir)
    except ConfigError as exc:
        print(f"decilab: config error: {exc}", file=sys.stderr)
        return 2
    except HypothesisGateError as exc:
        print(f"decilab: rejected: {exc}", file=sys.stderr)
        return 3


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()

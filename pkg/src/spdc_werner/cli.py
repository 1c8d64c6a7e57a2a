"""Batch command-line front end.

Subcommands: ``sweep`` (gain/loss grids to CSV or JSON), ``matrix`` (export
one two-photon state), ``oracle-check`` (brute force versus closed form),
``tomo simulate`` / ``tomo reconstruct`` (coincidence counting and
maximum-likelihood tomography), and ``fit`` (gain calibration).

All stochastic subcommands require an explicit ``--seed``; given identical
arguments the outputs are byte-identical. Relative ``--out`` paths resolve
against ``$SPDC_WERNER_OUTDIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    fit_gain,
    read_calibration_csv,
    transmitted_photons_per_mode,
)
from .channel import (
    BRUTE_FORCE_MAX_PAIRS,
    post_select_two_photon,
    singlet_weight,
    transmitted_reduced_state,
    two_photon_block_closed,
    two_photon_state,
)
from .errors import ConvergenceError, FitError
from .metrics import metrics_report
from .source import GainChannelParams
from .tomography import (
    ml_reconstruction,
    read_count_records,
    simulate_counts,
    standard_tomography_settings,
    witness_settings,
    write_count_records,
)

HL_WARN_THRESHOLD = 0.1


def _fmt(x: float) -> str:
    """Floats serialized with 12 significant digits for stable files."""
    return f"{x:.12g}"


def _resolve_out(path_str: str | None) -> Path | None:
    if path_str is None:
        return None
    path = Path(path_str)
    if not path.is_absolute():
        base = os.environ.get("SPDC_WERNER_OUTDIR")
        if base:
            path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parse_floats(text: str) -> list[float]:
    values = [float(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def _parse_ints(text: str) -> list[int]:
    values = [int(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def _warn_hl(params: GainChannelParams) -> None:
    level = transmitted_photons_per_mode(params)
    if level > HL_WARN_THRESHOLD:
        print(
            f"warning: eta*sinh^2(g) = {level:.3g} > {HL_WARN_THRESHOLD}; "
            "the two-photon treatment assumes high loss",
            file=sys.stderr,
        )


def _cmd_sweep(args) -> int:
    rows = []
    failed = False
    for g in args.g:
        for eta in args.eta:
            try:
                params = GainChannelParams(g=g, eta=eta)
                rho = two_photon_state(params, n_max=args.nmax)
                report = metrics_report(rho)
                rows.append(
                    {
                        "g": g,
                        "eta": eta,
                        "p_theory": singlet_weight(params),
                        "p_series": report["p"],
                        "tangle": report["tangle"],
                        "linear_entropy": report["linear_entropy"],
                        "witness": report["witness"],
                    }
                )
            except (ValueError, ConvergenceError) as exc:
                failed = True
                print(f"error: g={g} eta={eta}: {exc}", file=sys.stderr)
    out = _resolve_out(args.out)
    if args.format == "json":
        _emit(_dump_json(rows), out)
    else:
        header = ("g", "eta", "p_theory", "p_series", "tangle",
                  "linear_entropy", "witness")
        lines = [",".join(header)]
        lines += [",".join(_fmt(row[k]) for k in header) for row in rows]
        _emit("\n".join(lines) + "\n", out)
    return 1 if failed else 0


def _cmd_matrix(args) -> int:
    params = GainChannelParams(g=args.g, eta=args.eta)
    _warn_hl(params)
    rho = two_photon_state(params, n_max=args.nmax)
    payload = rho.to_dict()
    payload["g"] = args.g
    payload["eta"] = args.eta
    _emit(_dump_json(payload), _resolve_out(args.out))
    return 0


def _cmd_oracle_check(args) -> int:
    worst = 0.0
    failed = False
    for n in args.n:
        if n > BRUTE_FORCE_MAX_PAIRS:
            print(f"error: n={n} exceeds brute-force capacity "
                  f"{BRUTE_FORCE_MAX_PAIRS}", file=sys.stderr)
            return 1
    for n in args.n:
        for eta in args.eta:
            brute = post_select_two_photon(transmitted_reduced_state(n, eta))
            closed = two_photon_block_closed(n, eta)
            dev = float(np.max(np.abs(brute.entries - closed.entries)))
            worst = max(worst, dev)
            status = "ok" if dev <= args.tol else "FAIL"
            print(f"n={n} eta={_fmt(eta)}: max deviation {dev:.3e} {status}")
            if dev > args.tol:
                failed = True
    print(f"worst deviation {worst:.3e} (tolerance {args.tol:.1e})")
    return 1 if failed else 0


def _cmd_tomo_simulate(args) -> int:
    params = GainChannelParams(g=args.g, eta=args.eta)
    _warn_hl(params)
    rho = two_photon_state(params, n_max=args.nmax)
    settings = (
        witness_settings() if args.settings == "witness"
        else standard_tomography_settings()
    )
    records = simulate_counts(rho, settings, args.counts_per_setting, args.seed)
    write_count_records(records, _resolve_out(args.out))
    return 0


def _cmd_tomo_reconstruct(args) -> int:
    try:
        records = read_count_records(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        result = ml_reconstruction(
            records, total_per_setting=args.counts_per_setting
        )
    except ConvergenceError as exc:
        print(f"error: {exc} {exc.diagnostics}", file=sys.stderr)
        return 1
    reference = None
    if args.g is not None and args.eta is not None:
        reference = two_photon_state(GainChannelParams(g=args.g, eta=args.eta))
    payload = {
        "state": result.state.to_dict(),
        "log_likelihood": result.log_likelihood,
        "iterations": result.n_iterations,
        "metrics": metrics_report(result.state, reference=reference),
    }
    _emit(_dump_json(payload), _resolve_out(args.out))
    return 0


def _cmd_fit(args) -> int:
    try:
        points = read_calibration_csv(args.input)
        fit = fit_gain(points, repetition_rate=args.rate)
    except (OSError, ValueError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = {
        "gain_scale": fit.gain_scale,
        "g_max": fit.g_max,
        "etas": {str(det): eta for det, eta in fit.etas.items()},
        "repetition_rate": fit.repetition_rate,
        "covariance": fit.covariance.tolist(),
        "residuals": fit.residuals.tolist(),
    }
    _emit(_dump_json(payload), _resolve_out(args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdc-werner",
        description="Lossy-channel down-conversion states: sweeps, "
        "oracle checks, tomography and calibration.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="grid of (g, eta) rows with Werner metrics")
    sweep.add_argument("--g", type=_parse_floats, required=True,
                       help="comma-separated gain values")
    sweep.add_argument("--eta", type=_parse_floats, required=True,
                       help="comma-separated transmittivities")
    sweep.add_argument("--nmax", type=int, default=None,
                       help="series truncation (default: automatic)")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.set_defaults(func=_cmd_sweep)

    matrix = sub.add_parser("matrix", help="export one two-photon state as JSON")
    matrix.add_argument("--g", type=float, required=True)
    matrix.add_argument("--eta", type=float, required=True)
    matrix.add_argument("--nmax", type=int, default=None)
    matrix.add_argument("--out", default=None)
    matrix.set_defaults(func=_cmd_matrix)

    oracle = sub.add_parser(
        "oracle-check",
        help="brute-force vs closed-form coincidence blocks",
    )
    oracle.add_argument("--n", type=_parse_ints, default=[1, 2, 3, 4])
    oracle.add_argument("--eta", type=_parse_floats,
                        default=[0.01, 0.1, 0.3, 0.5])
    oracle.add_argument("--tol", type=float, default=1e-10)
    oracle.set_defaults(func=_cmd_oracle_check)

    tomo = sub.add_parser("tomo", help="simulate or reconstruct coincidence data")
    tomo_sub = tomo.add_subparsers(dest="tomo_command", required=True)

    simulate = tomo_sub.add_parser("simulate", help="draw counts from a theory state")
    simulate.add_argument("--g", type=float, required=True)
    simulate.add_argument("--eta", type=float, required=True)
    simulate.add_argument("--nmax", type=int, default=None)
    simulate.add_argument("--counts-per-setting", type=int, required=True)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--settings", choices=("tomography", "witness"),
                          default="tomography")
    simulate.add_argument("--out", required=True)
    simulate.set_defaults(func=_cmd_tomo_simulate)

    reconstruct = tomo_sub.add_parser("reconstruct",
                                      help="maximum-likelihood state estimate")
    reconstruct.add_argument("--input", required=True, help="counts CSV")
    reconstruct.add_argument("--counts-per-setting", type=int, default=None,
                             help="known flux per setting (default: estimated)")
    reconstruct.add_argument("--g", type=float, default=None,
                             help="reference gain for fidelity")
    reconstruct.add_argument("--eta", type=float, default=None,
                             help="reference transmittivity for fidelity")
    reconstruct.add_argument("--out", default=None)
    reconstruct.set_defaults(func=_cmd_tomo_reconstruct)

    fit = sub.add_parser("fit", help="gain calibration from rate-vs-power CSV")
    fit.add_argument("--input", required=True, help="calibration CSV")
    fit.add_argument("--rate", type=float, required=True,
                     help="pump repetition rate in Hz")
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=_cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

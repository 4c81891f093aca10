"""Command-line front end: curve tables, simulation, fitting, verification.

Exit codes: 0 success, 1 runtime failure (fit did not converge, oracle
tolerance breach, truncation), 2 usage or validation errors.  All file
writes go through a temp-file-plus-rename so outputs are never left half
written.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

from . import fitting, fock, metrology, simulate
from .gaussian import InterferometerParams, apply_loss, photon_moments, seeded_tmss
from .metrology import SqlKind

__all__ = ["main"]


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tsui-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def parse_span(text: str) -> np.ndarray:
    """Parse a grid flag: 'start:stop:step' (inclusive), 'a,b,c', or 'x'.

    The stop endpoint is included whenever it lies within 1e-12 of a grid
    point.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty grid specification")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"could not parse grid {text!r}") from None
        if step <= 0.0 or stop < start:
            raise ValueError(f"grid needs stop >= start and step > 0, got {text!r}")
        count = int(math.floor((stop - start) / step + 1e-12)) + 1
        values = start + step * np.arange(count)
        if values[-1] > stop + 1e-12:
            values = values[:-1]
        return values
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        raise ValueError(f"could not parse values {text!r}") from None


def _parse_eta(text: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        value = float(parts[0])
        return value, value
    if len(parts) == 2:
        return float(parts[0]), float(parts[1])
    raise ValueError(f"transmission must be 'eta' or 'eta_p,eta_c', got {text!r}")


def _single(values: np.ndarray, name: str) -> float:
    if values.size != 1:
        raise ValueError(f"{name} expects a single value, got {values.size}")
    return float(values[0])


def _format_table(table: metrology.CurveTable, fmt: str) -> str:
    return table.csv_text() if fmt == "csv" else table.json_text()


def cmd_curves(args: argparse.Namespace) -> int:
    figure = args.figure
    fmt = args.format
    out = args.out or f"{figure}.{fmt}"
    if figure == "fig3":
        grid = parse_span(args.gain) if args.gain else parse_span("1:5:0.05")
        table = metrology.curve_sensitivity_vs_gain(args.alpha, grid)
    elif figure == "fig4a":
        gain = _single(parse_span(args.gain), "--gain") if args.gain else 2.0
        ep, ec = _parse_eta(args.eta[0]) if args.eta else (1.0, 1.0)
        if args.eta and len(args.eta) > 1:
            raise ValueError("fig4a takes a single --eta setting")
        lam_grid = parse_span(args.lambdas) if args.lambdas else parse_span("0:1:0.01")
        params = InterferometerParams(gain=gain, eta_p=ep, eta_c=ec, alpha=args.alpha)
        table = metrology.curve_noise_vs_lambda(params, lam_grid)
    elif figure in ("fig4b", "fig8"):
        if figure == "fig4b":
            default_etas = ["1.0", "0.9,0.9", "0.8,0.8"]
            default_grid = "1:5:0.05"
        else:
            default_etas = ["0.745,0.775", "1.0"]
            default_grid = "1:3:0.02"
        etas = [_parse_eta(e) for e in (args.eta or default_etas)]
        grid = parse_span(args.gain) if args.gain else parse_span(default_grid)
        table = metrology.curve_lambda_opt_vs_gain(etas, grid)
    elif figure == "fig6":
        gains = parse_span(args.gain) if args.gain else np.array([1.1])
        ep, ec = _parse_eta(args.eta[0]) if args.eta else (1.0, 1.0)
        if args.eta and len(args.eta) > 1:
            raise ValueError("fig6 takes a single --eta setting")
        lam_grid = parse_span(args.lambdas) if args.lambdas else parse_span("0:1:0.01")
        params_list = [
            InterferometerParams(gain=float(g), eta_p=ep, eta_c=ec) for g in gains
        ]
        table = metrology.curve_snri_vs_lambda(params_list, lam_grid)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown figure {figure!r}")
    _write_atomic(out, _format_table(table, fmt))
    print(f"wrote {out} ({table.rows.shape[0]} rows, {len(table.columns)} columns)")
    if args.verbose:
        for key in sorted(table.meta):
            print(f"  {key} = {table.meta[key]}", file=sys.stderr)
    return 0


def cmd_lambda_opt(args: argparse.Namespace) -> int:
    params = InterferometerParams(gain=args.gain, eta_p=args.eta_p, eta_c=args.eta_c)
    value = metrology.lambda_opt(params)
    print(np.format_float_positional(value, unique=True, trim="0"))
    if args.numeric:
        check = metrology.lambda_opt_numeric(params)
        print(
            "numeric check: "
            + np.format_float_positional(check, unique=True, trim="0")
            + f" (difference {abs(check - value):.3e})"
        )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = simulate.load_sim_config(args.config)
    grid = parse_span(args.lambdas)
    dataset = simulate.measure_noise_vs_lambda(
        config,
        grid,
        trials=args.trials,
        center_freq=args.center_freq,
        rbw=args.rbw,
    )
    # NoiseDataset.to_csv is a plain writer; route through the atomic helper.
    tmp_lines = [f"# source = {dataset.source}"]
    for key in sorted(dataset.meta):
        tmp_lines.append(f"# {key} = {dataset.meta[key]}")
    tmp_lines.append("lambda,noise_db,sigma_db")
    for row in zip(dataset.lam, dataset.noise_db, dataset.sigma_db):
        tmp_lines.append(
            ",".join(np.format_float_positional(v, unique=True, trim="0") for v in row)
        )
    _write_atomic(args.out, "\n".join(tmp_lines) + "\n")
    print(f"wrote {args.out} ({len(dataset)} rows)")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    dataset = fitting.load_noise_csv(args.data)
    if args.unconstrained:
        offset = None
    else:
        offset = args.offset
    initial = None
    if args.initial:
        values = [float(v) for v in args.initial.split(",")]
        if len(values) != 4:
            raise ValueError("--initial expects 'gain,eta_p,eta_c,scale_db'")
        initial = tuple(values)
    options = fitting.FitOptions(loss_offset=offset, initial=initial)
    fit = fitting.fit_noise_curve(dataset, options)
    est = fitting.extract_lambda_opt(dataset, fit)
    _write_atomic(args.out, fit.json_text())
    print(fit.summary())
    print(
        f"  lambda_opt estimate = {est.value:.4f} +/- {est.sigma:.4f} ({est.method})"
    )
    if est.boundary_warning:
        print("  warning: measured minimum sits at the edge of the scanned range")
    if args.overlay:
        grid = parse_span(args.lambdas)
        for kind in (SqlKind.SQL2, SqlKind.SQL1):
            table = fitting.overlay_theory(fit, kind, grid)
            path = f"{args.overlay}_{kind.value}.csv"
            _write_atomic(path, table.csv_text())
            print(f"wrote {path}")
    print(f"wrote {args.out}")
    return 0


def _check(name: str, err: float, tol: float, lines: list[str]) -> bool:
    ok = err <= tol
    lines.append(f"{name:<52s} {'PASS' if ok else 'FAIL'}  max_err={err:.3e}  tol={tol:.0e}")
    return ok


def cmd_verify(args: argparse.Namespace) -> int:
    ep, ec = _parse_eta(args.eta)
    lambdas = [float(v) for v in parse_span(args.lambdas)]
    params = InterferometerParams(gain=args.gain, eta_p=ep, eta_c=ec, alpha=args.alpha)
    lines: list[str] = []
    ok = True

    pure_fock, report = fock.build_seeded_tmss_fock(
        params.gain, params.alpha, cutoff=args.cutoff
    )
    lines.append(
        f"state build: cutoff={args.cutoff}, norm deficit {report.norm_deficit:.3e}"
    )
    pure_gauss = seeded_tmss(params)

    if params.alpha == 0.0:
        # Unseeded output is diagonal in the photon-number basis with
        # amplitudes tanh(r)^n / cosh(r).
        tanh_r = math.tanh(params.r)
        n = np.arange(args.cutoff + 1)
        ladder = tanh_r**n / math.cosh(params.r)
        err = float(np.abs(np.diag(pure_fock.amplitudes) - ladder).max())
        offdiag = pure_fock.amplitudes - np.diag(np.diag(pure_fock.amplitudes))
        err = max(err, float(np.abs(offdiag).max()))
        ok &= _check("photon-pair ladder amplitudes", err, 1e-8, lines)

    def compare(tag: str, fock_state, gauss_state) -> bool:
        bundle = fock.oracle_moment_bundle(fock_state, lambdas)
        mean_err = 0.0
        var_err = 0.0
        for lam, fm, fv in bundle["joint"]:
            gm = gauss_state.mean[1] + lam * gauss_state.mean[3]
            gv = (
                gauss_state.cov[1, 1]
                + lam * lam * gauss_state.cov[3, 3]
                + 2.0 * lam * gauss_state.cov[1, 3]
            )
            mean_err = max(mean_err, abs(fm - gm))
            var_err = max(var_err, abs(fv - gv))
        all_ok = _check(f"{tag}: joint quadrature means", mean_err, 1e-7, lines)
        all_ok &= _check(f"{tag}: joint quadrature variances", var_err, 1e-6, lines)
        mode_err_mean = 0.0
        mode_err_var = 0.0
        photon_err = 0.0
        for mode in ("probe", "conjugate"):
            base = 0 if mode == "probe" else 2
            for quad, idx in (("x", 0), ("y", 1)):
                fm, fv = bundle[mode][quad]
                gm = gauss_state.mean[base + idx]
                gv = gauss_state.cov[base + idx, base + idx]
                mode_err_mean = max(mode_err_mean, abs(fm - gm))
                mode_err_var = max(mode_err_var, abs(fv - gv))
            fn, fvar = bundle[mode]["n"]
            moments = photon_moments(gauss_state, mode)
            photon_err = max(
                photon_err, abs(fn - moments.mean_n), abs(fvar - moments.var_n)
            )
        all_ok &= _check(f"{tag}: single-mode quadrature means", mode_err_mean, 1e-7, lines)
        all_ok &= _check(f"{tag}: single-mode quadrature variances", mode_err_var, 1e-6, lines)
        all_ok &= _check(f"{tag}: photon number moments", photon_err, 1e-6, lines)
        return all_ok

    ok &= compare("lossless", pure_fock, pure_gauss)

    if ep < 1.0 or ec < 1.0:
        lossy_fock = fock.apply_loss_fock(
            fock.apply_loss_fock(pure_fock, ep, "probe"), ec, "conjugate"
        )
        lossy_gauss = apply_loss(pure_gauss, ep, ec)
        ok &= compare(f"lossy (eta_p={ep:g}, eta_c={ec:g})", lossy_fock, lossy_gauss)

    for line in lines:
        print(line)
    print("verification " + ("PASSED" if ok else "FAILED"))
    return 0 if ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsui",
        description=(
            "Noise, sensitivity and fitting toolkit for a truncated SU(1,1) "
            "interferometer read out by weighted joint homodyne detection."
        ),
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="echo parameter metadata"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_curves = sub.add_parser(
        "curves",
        help="write one of the standard theory curve tables",
        description=(
            "Figures: fig3 sensitivity vs gain, fig4a joint noise vs weight, "
            "fig4b/fig8 optimal weight vs gain, fig6 SNR improvement vs weight."
        ),
    )
    p_curves.add_argument("figure", choices=["fig3", "fig4a", "fig4b", "fig6", "fig8"])
    p_curves.add_argument("--gain", help="gain value or grid start:stop:step")
    p_curves.add_argument(
        "--eta",
        action="append",
        help="transmission 'eta' or 'eta_p,eta_c'; repeatable for fig4b/fig8",
    )
    p_curves.add_argument("--alpha", type=float, default=100.0, help="seed amplitude")
    p_curves.add_argument("--lambdas", help="weight grid start:stop:step")
    p_curves.add_argument("--out", help="output path (default <figure>.<format>)")
    p_curves.add_argument("--format", choices=["csv", "json"], default="csv")
    p_curves.set_defaults(func=cmd_curves)

    p_lam = sub.add_parser("lambda-opt", help="print the optimal readout weight")
    p_lam.add_argument("--gain", type=float, required=True)
    p_lam.add_argument("--eta-p", type=float, default=1.0)
    p_lam.add_argument("--eta-c", type=float, default=1.0)
    p_lam.add_argument(
        "--numeric", action="store_true", help="also print the direct-search check"
    )
    p_lam.set_defaults(func=cmd_lambda_opt)

    p_sim = sub.add_parser(
        "simulate", help="simulate a noise-vs-weight scan from a config file"
    )
    p_sim.add_argument("--config", required=True, help="key = value settings file")
    p_sim.add_argument("--lambdas", default="0:1:0.05", help="weight grid")
    p_sim.add_argument("--trials", type=int, default=2)
    p_sim.add_argument("--center-freq", type=float, default=1e6)
    p_sim.add_argument("--rbw", type=float, default=1e5)
    p_sim.add_argument("--out", default="noise_vs_lambda.csv")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a noise scan and extract the optimal weight")
    p_fit.add_argument("--data", required=True, help="noise CSV (lambda,noise_db,sigma_db)")
    p_fit.add_argument("--out", default="fit_result.json")
    p_fit.add_argument(
        "--offset",
        type=float,
        default=0.03,
        help="fixed eta_c - eta_p during the fit",
    )
    p_fit.add_argument(
        "--unconstrained",
        action="store_true",
        help="fit all four parameters (degenerate; diagnostics only)",
    )
    p_fit.add_argument("--initial", help="start point 'gain,eta_p,eta_c,scale_db'")
    p_fit.add_argument("--overlay", help="prefix for theory overlay tables")
    p_fit.add_argument("--lambdas", default="0:1:0.01", help="overlay weight grid")
    p_fit.set_defaults(func=cmd_fit)

    p_ver = sub.add_parser(
        "verify", help="cross-check Gaussian moments against the Fock oracle"
    )
    p_ver.add_argument("--gain", type=float, default=2.0)
    p_ver.add_argument("--alpha", type=float, default=0.0)
    p_ver.add_argument("--eta", default="0.76", help="'eta' or 'eta_p,eta_c'")
    p_ver.add_argument("--cutoff", type=int, default=40)
    p_ver.add_argument("--lambdas", default="0,0.5,1")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except fock.TruncationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except fitting.FitFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

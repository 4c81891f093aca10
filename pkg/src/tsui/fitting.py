"""Noise-curve datasets, weighted model fits, and weight extraction.

A noise-versus-weight scan (measured or simulated) is fitted in dB space
to the closed-form model

    model(lam) = 10 log10( V_p + lam^2 V_c + 2 lam C ) + scale_db

with the variance coefficients from :func:`tsui.metrology.joint_variance_quadratic`.
The free ``scale_db`` absorbs the overall detection calibration, which
makes the unconstrained four-parameter family exactly degenerate (a
common rescaling of the coefficients is indistinguishable from a scale
shift).  Fits therefore default to a fixed transmission offset
eta_c - eta_p, leaving three identifiable parameters; the unconstrained
mode stays available for diagnostics and is flagged as ill-conditioned.

Quoted parameter uncertainties come from the Gauss-Newton covariance
(J^T J)^(-1) of the sigma-weighted residuals; they are meaningful only
to the extent the per-point sigma_db entries are.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import metrology
from .gaussian import InterferometerParams
from .metrology import CurveTable, SqlKind

__all__ = [
    "FitFailure",
    "FitOptions",
    "FitResult",
    "LambdaOptEstimate",
    "NoiseDataset",
    "extract_lambda_opt",
    "fit_noise_curve",
    "lambda_opt_vs_gain_report",
    "load_noise_csv",
    "overlay_theory",
]

_GAIN_BOUNDS = (1.0, 50.0)
_SCALE_BOUNDS = (-80.0, 80.0)
_CONDITION_LIMIT = 1e12


class FitFailure(RuntimeError):
    """No fit start converged; carries the best attempt for diagnosis."""

    def __init__(self, message: str, best_cost: float | None = None) -> None:
        if best_cost is not None:
            message += f" (best residual cost {best_cost:.6g})"
        super().__init__(message)
        self.best_cost = best_cost


@dataclass
class NoiseDataset:
    """One noise-versus-weight scan with per-point uncertainties.

    Rows are sorted by weight on construction.  Duplicate weights are
    allowed (replicate measurements); fitting requires at least five
    distinct ones.
    """

    lam: np.ndarray
    noise_db: np.ndarray
    sigma_db: np.ndarray
    source: str = "measured"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=float)
        noise = np.asarray(self.noise_db, dtype=float)
        sigma = np.asarray(self.sigma_db, dtype=float)
        if not (lam.shape == noise.shape == sigma.shape) or lam.ndim != 1:
            raise ValueError("lam, noise_db and sigma_db must be equal-length 1-D arrays")
        if lam.size < 5:
            raise ValueError(f"need at least 5 rows, got {lam.size}")
        if not (
            np.all(np.isfinite(lam))
            and np.all(np.isfinite(noise))
            and np.all(np.isfinite(sigma))
        ):
            raise ValueError("dataset values must be finite")
        if np.any(lam < 0.0) or np.any(lam > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        if np.any(sigma <= 0.0):
            raise ValueError("sigma_db entries must be > 0")
        order = np.argsort(lam, kind="stable")
        self.lam = lam[order]
        self.noise_db = noise[order]
        self.sigma_db = sigma[order]

    def __len__(self) -> int:
        return int(self.lam.size)

    def n_distinct(self) -> int:
        return int(np.unique(self.lam).size)

    def to_csv(self, path: str) -> None:
        lines = [f"# source = {self.source}"]
        for key in sorted(self.meta):
            lines.append(f"# {key} = {self.meta[key]}")
        lines.append("lambda,noise_db,sigma_db")
        for row in zip(self.lam, self.noise_db, self.sigma_db):
            lines.append(
                ",".join(np.format_float_positional(v, unique=True, trim="0") for v in row)
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def load_noise_csv(path: str) -> NoiseDataset:
    """Read a noise scan written by :meth:`NoiseDataset.to_csv`.

    Expects ``#`` metadata comments, a ``lambda,noise_db,sigma_db``
    header, and one float triple per row.  Malformed content raises
    ``ValueError`` naming the offending line.

    Args:
        path: CSV file to read.

    Returns:
        The parsed :class:`NoiseDataset`.
    """
    meta: dict = {}
    source = "measured"
    rows: list[tuple[float, float, float]] = []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key == "source":
                        source = value
                    elif key:
                        meta[key] = value
                continue
            if not header_seen:
                names = [c.strip().lower() for c in line.split(",")]
                if names != ["lambda", "noise_db", "sigma_db"]:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 'lambda,noise_db,sigma_db', "
                        f"got {line!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                rows.append(tuple(float(p) for p in parts))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: could not parse row {line!r}") from None
    if not header_seen:
        raise ValueError(f"{path}: missing 'lambda,noise_db,sigma_db' header")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return NoiseDataset(
        lam=data[:, 0], noise_db=data[:, 1], sigma_db=data[:, 2], source=source, meta=meta
    )


@dataclass(frozen=True)
class FitOptions:
    """Settings for :func:`fit_noise_curve`.

    Attributes:
        loss_offset: fixed value of eta_c - eta_p during the fit, or
            ``None`` for the (degenerate) unconstrained four-parameter
            mode.  Must lie in [-0.2, 0.2].
        initial: optional user start (gain, eta_p, eta_c, scale_db),
            tried in addition to the built-in deterministic starts.
        max_nfev: residual-evaluation budget per start.
        tol: ftol/xtol/gtol passed to the least-squares solver.
    """

    loss_offset: float | None = 0.03
    initial: tuple[float, float, float, float] | None = None
    max_nfev: int = 400
    tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.loss_offset is not None and not -0.2 <= self.loss_offset <= 0.2:
            raise ValueError(
                f"loss_offset must lie in [-0.2, 0.2], got {self.loss_offset!r}"
            )
        if self.initial is not None:
            if len(self.initial) != 4 or not all(
                math.isfinite(float(v)) for v in self.initial
            ):
                raise ValueError(
                    "initial must be 4 finite numbers (gain, eta_p, eta_c, scale_db)"
                )
        if self.max_nfev < 10:
            raise ValueError("max_nfev must be >= 10")
        if not 1e-15 <= self.tol <= 1e-4:
            raise ValueError("tol must lie in [1e-15, 1e-4]")


@dataclass
class FitResult:
    """Fitted noise-model parameters with uncertainties and diagnostics.

    ``param_names``/``param_values``/``param_cov`` describe the free
    parameter vector actually optimized (three entries in the default
    constrained mode), which downstream error propagation uses.
    """

    gain: float
    eta_p: float
    eta_c: float
    scale_db: float
    sigma_gain: float
    sigma_eta_p: float
    sigma_eta_c: float
    sigma_scale_db: float
    chi_square: float
    n_points: int
    lambda_opt_fit: float
    lambda_opt_direct: float
    condition_number: float
    loss_offset: float | None
    warnings: list[str]
    param_names: tuple[str, ...]
    param_values: np.ndarray
    param_cov: np.ndarray
    source: str = "measured"

    def params(self) -> InterferometerParams:
        return InterferometerParams(gain=self.gain, eta_p=self.eta_p, eta_c=self.eta_c)

    def to_dict(self) -> dict:
        return {
            "gain": self.gain,
            "eta_p": self.eta_p,
            "eta_c": self.eta_c,
            "scale_db": self.scale_db,
            "sigma_gain": self.sigma_gain,
            "sigma_eta_p": self.sigma_eta_p,
            "sigma_eta_c": self.sigma_eta_c,
            "sigma_scale_db": self.sigma_scale_db,
            "chi_square": self.chi_square,
            "n_points": self.n_points,
            "lambda_opt_fit": self.lambda_opt_fit,
            "lambda_opt_direct": self.lambda_opt_direct,
            "condition_number": self.condition_number,
            "loss_offset": self.loss_offset,
            "warnings": list(self.warnings),
            "param_names": list(self.param_names),
            "param_values": [float(v) for v in self.param_values],
            "param_cov": [[float(v) for v in row] for row in self.param_cov],
            "source": self.source,
        }

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        mode = (
            "unconstrained"
            if self.loss_offset is None
            else f"eta_c - eta_p fixed at {self.loss_offset:g}"
        )
        lines = [
            f"noise-curve fit ({self.n_points} points, {mode})",
            f"  gain      = {self.gain:.4f} +/- {self.sigma_gain:.4f}",
            f"  eta_p     = {self.eta_p:.4f} +/- {self.sigma_eta_p:.4f}",
            f"  eta_c     = {self.eta_c:.4f} +/- {self.sigma_eta_c:.4f}",
            f"  scale_db  = {self.scale_db:.4f} +/- {self.sigma_scale_db:.4f}",
            f"  chi^2     = {self.chi_square:.2f} for {self.n_points} points",
            f"  lambda_opt (model) = {self.lambda_opt_fit:.4f}",
            f"  lambda_opt (data)  = {self.lambda_opt_direct:.4f}",
            f"  condition number   = {self.condition_number:.3g}",
        ]
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LambdaOptEstimate:
    """Optimal weight extracted from one dataset.

    ``value``/``sigma`` follow the requested method; the individual
    model-fit and direct (parabolic) results are kept alongside.
    """

    value: float
    sigma: float
    method: str
    direct_value: float
    direct_sigma: float
    fit_value: float | None
    fit_sigma: float | None
    boundary_warning: bool


def _unpack(x: np.ndarray, offset: float | None) -> tuple[float, float, float, float]:
    if offset is None:
        return float(x[0]), float(x[1]), float(x[2]), float(x[3])
    gain, eta_c, scale = float(x[0]), float(x[1]), float(x[2])
    return gain, eta_c - offset, eta_c, scale


def _model_db(lam: np.ndarray, x: np.ndarray, offset: float | None) -> np.ndarray:
    gain, eta_p, eta_c, scale = _unpack(x, offset)
    v_p, v_c, cross = metrology.joint_variance_quadratic(gain, eta_p, eta_c)
    var = v_p + lam * lam * v_c + 2.0 * lam * cross
    return 10.0 * np.log10(var) + scale


def _three_lowest_distinct(dataset: NoiseDataset) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(dataset.noise_db, kind="stable")
    lams: list[float] = []
    ys: list[float] = []
    for idx in order:
        lam = float(dataset.lam[idx])
        if any(abs(lam - l) < 1e-12 for l in lams):
            continue
        lams.append(lam)
        ys.append(float(dataset.noise_db[idx]))
        if len(lams) == 3:
            break
    if len(lams) < 3:
        raise ValueError("need at least 3 distinct weights for a parabolic minimum")
    lam_arr = np.array(lams)
    y_arr = np.array(ys)
    order = np.argsort(lam_arr)
    return lam_arr[order], y_arr[order]


def _parabola_vertex(lams: np.ndarray, ys: np.ndarray) -> float:
    a, b, _ = np.polyfit(lams, ys, 2)
    if a <= 0.0 or not math.isfinite(a):
        # No upward curvature: fall back to the lowest sample.
        return float(lams[int(np.argmin(ys))])
    return float(min(max(-b / (2.0 * a), 0.0), 1.0))


def _direct_lambda_opt(dataset: NoiseDataset) -> float:
    lams, ys = _three_lowest_distinct(dataset)
    return _parabola_vertex(lams, ys)


def _start_points(dataset: NoiseDataset) -> list[tuple[float, float]]:
    # Deterministic (gain, eta_c) starts: a fixed grid plus one guess
    # inverted from the location of the measured minimum assuming no loss.
    starts = [
        (g0, e0)
        for g0 in (1.05, 1.3, 1.8, 2.6, 3.6)
        for e0 in (0.6, 0.9)
    ]
    lam_min = min(max(_direct_lambda_opt(dataset), 0.05), 0.95)
    r_hat = 0.5 * math.atanh(lam_min)
    g_hat = math.cosh(r_hat) ** 2
    starts.append((g_hat, 0.85))
    return starts


def fit_noise_curve(dataset: NoiseDataset, options: FitOptions | None = None) -> FitResult:
    """Weighted least-squares fit of the noise model to a scan.

    Residuals are (model_db - noise_db) / sigma_db; the solver is a
    bounded trust-region least-squares run from several deterministic
    starts, keeping the best converged solution.  Parameter uncertainties
    are the square roots of the diagonal of (J^T J)^(-1) at the solution;
    no rescaling by the residual scatter is applied, so they inherit the
    calibration of ``sigma_db``.

    Args:
        dataset: scan with at least 5 distinct weights.
        options: fit settings; defaults to ``FitOptions()`` (constrained
            mode with eta_c - eta_p = 0.03).

    Returns:
        A :class:`FitResult`.

    Raises:
        FitFailure: if no start converges within its budget.
        ValueError: for unusable datasets.
    """
    if options is None:
        options = FitOptions()
    if dataset.n_distinct() < 5:
        raise ValueError(
            f"need at least 5 distinct weights to fit, got {dataset.n_distinct()}"
        )
    offset = options.loss_offset
    lam = dataset.lam
    y = dataset.noise_db
    sigma = dataset.sigma_db

    def residuals(x: np.ndarray) -> np.ndarray:
        return (_model_db(lam, x, offset) - y) / sigma

    if offset is None:
        lower = np.array([_GAIN_BOUNDS[0], 0.0, 0.0, _SCALE_BOUNDS[0]])
        upper = np.array([_GAIN_BOUNDS[1], 1.0, 1.0, _SCALE_BOUNDS[1]])
    else:
        ec_lo = max(0.0, offset)
        ec_hi = min(1.0, 1.0 + offset)
        lower = np.array([_GAIN_BOUNDS[0], ec_lo, _SCALE_BOUNDS[0]])
        upper = np.array([_GAIN_BOUNDS[1], ec_hi, _SCALE_BOUNDS[1]])

    def pack_start(g0: float, ec0: float) -> np.ndarray:
        if offset is None:
            x0 = np.array([g0, max(ec0 - 0.03, 0.0), ec0, 0.0])
        else:
            x0 = np.array([g0, ec0, 0.0])
        x0 = np.clip(x0, lower + 1e-9, upper - 1e-9)
        # Center the scale on the data for this shape.
        x0[-1] = float(np.median(y - _model_db(lam, x0, offset)))
        x0[-1] = min(max(x0[-1], _SCALE_BOUNDS[0] + 1e-9), _SCALE_BOUNDS[1] - 1e-9)
        return x0

    start_list = [pack_start(g0, ec0) for g0, ec0 in _start_points(dataset)]
    if options.initial is not None:
        g0, ep0, ec0, s0 = (float(v) for v in options.initial)
        if offset is None:
            x0 = np.array([g0, ep0, ec0, s0])
        else:
            x0 = np.array([g0, ec0, s0])
        start_list.insert(0, np.clip(x0, lower + 1e-9, upper - 1e-9))

    best = None
    for x0 in start_list:
        res = least_squares(
            residuals,
            x0,
            bounds=(lower, upper),
            method="trf",
            ftol=options.tol,
            xtol=options.tol,
            gtol=options.tol,
            max_nfev=options.max_nfev,
        )
        if res.status > 0 and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise FitFailure(
            f"no fit start converged within {options.max_nfev} evaluations"
        )

    jac = best.jac
    jtj = jac.T @ jac
    condition = float(np.linalg.cond(jtj))
    warnings: list[str] = []
    if not math.isfinite(condition) or condition > _CONDITION_LIMIT:
        warnings.append(
            "ill-conditioned fit (degenerate or flat model); "
            "uncertainties use a pseudoinverse"
        )
        cov = np.linalg.pinv(jtj)
    else:
        cov = np.linalg.inv(jtj)
    sigmas = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    x_hat = best.x
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        if x_hat[i] - lo < 1e-8 * (hi - lo) or hi - x_hat[i] < 1e-8 * (hi - lo):
            name = ("gain", "eta_c", "scale_db") if offset is not None else (
                "gain",
                "eta_p",
                "eta_c",
                "scale_db",
            )
            warnings.append(f"parameter {name[i]} sits at a fit bound")

    gain, eta_p, eta_c, scale = _unpack(x_hat, offset)
    if offset is None:
        names = ("gain", "eta_p", "eta_c", "scale_db")
        sigma_gain, sigma_ep, sigma_ec, sigma_scale = (float(s) for s in sigmas)
    else:
        names = ("gain", "eta_c", "scale_db")
        sigma_gain, sigma_ec, sigma_scale = (float(s) for s in sigmas)
        sigma_ep = sigma_ec

    fitted = InterferometerParams(
        gain=gain, eta_p=min(max(eta_p, 0.0), 1.0), eta_c=min(max(eta_c, 0.0), 1.0)
    )
    return FitResult(
        gain=gain,
        eta_p=fitted.eta_p,
        eta_c=fitted.eta_c,
        scale_db=scale,
        sigma_gain=sigma_gain,
        sigma_eta_p=sigma_ep,
        sigma_eta_c=sigma_ec,
        sigma_scale_db=sigma_scale,
        chi_square=float(np.sum(best.fun**2)),
        n_points=len(dataset),
        lambda_opt_fit=metrology.lambda_opt(fitted),
        lambda_opt_direct=_direct_lambda_opt(dataset),
        condition_number=condition,
        loss_offset=offset,
        warnings=warnings,
        param_names=names,
        param_values=np.array(x_hat, dtype=float),
        param_cov=np.array(cov, dtype=float),
        source=dataset.source,
    )


def extract_lambda_opt(
    dataset: NoiseDataset,
    fit: FitResult | None = None,
    n_bootstrap: int = 1000,
    rng_seed: int = 20210916,
) -> LambdaOptEstimate:
    """Optimal-weight estimate with uncertainty from one scan.

    The direct estimate is the vertex of a parabola through the three
    lowest distinct points; its uncertainty comes from a parametric
    bootstrap that redraws every point as N(noise_db, sigma_db^2) and
    repeats the extraction.  When a fit is supplied, the model-based
    estimate (closed-form optimal weight at the fitted parameters) is
    used as the headline value, with its uncertainty propagated from the
    fit covariance by finite differences; near the clamp at 1 that
    propagation degrades, as the clamped value stops responding to the
    parameters.

    Args:
        dataset: scan to analyze.
        fit: optional fit of the same dataset.
        n_bootstrap: bootstrap repetitions for the direct uncertainty.
        rng_seed: bootstrap seed (fixed default keeps results stable).

    Returns:
        A :class:`LambdaOptEstimate` with ``method`` "fit" or "direct".
    """
    if n_bootstrap < 2:
        raise ValueError("n_bootstrap must be >= 2")
    direct_value = _direct_lambda_opt(dataset)
    rng = np.random.default_rng(rng_seed)
    draws = np.empty(n_bootstrap)
    for k in range(n_bootstrap):
        resampled = NoiseDataset(
            lam=dataset.lam,
            noise_db=dataset.noise_db + rng.normal(0.0, dataset.sigma_db),
            sigma_db=dataset.sigma_db,
            source=dataset.source,
        )
        draws[k] = _direct_lambda_opt(resampled)
    direct_sigma = float(draws.std(ddof=1))
    min_idx = int(np.argmin(dataset.noise_db))
    boundary = min_idx in (0, len(dataset) - 1)

    fit_value = fit_sigma = None
    if fit is not None:

        def lam_of(x: np.ndarray) -> float:
            gain, eta_p, eta_c, _ = _unpack(x, fit.loss_offset)
            params = InterferometerParams(
                gain=max(gain, 1.0),
                eta_p=min(max(eta_p, 0.0), 1.0),
                eta_c=min(max(eta_c, 0.0), 1.0),
            )
            return metrology.lambda_opt(params)

        x_hat = fit.param_values
        grad = np.zeros(x_hat.size)
        for i in range(x_hat.size):
            h = 1e-6 * max(1.0, abs(x_hat[i]))
            xp = x_hat.copy()
            xm = x_hat.copy()
            xp[i] += h
            xm[i] -= h
            grad[i] = (lam_of(xp) - lam_of(xm)) / (2.0 * h)
        fit_value = fit.lambda_opt_fit
        fit_sigma = float(math.sqrt(max(grad @ fit.param_cov @ grad, 0.0)))

    if fit is not None:
        value, sigma, method = fit_value, fit_sigma, "fit"
    else:
        value, sigma, method = direct_value, direct_sigma, "direct"
    return LambdaOptEstimate(
        value=value,
        sigma=sigma,
        method=method,
        direct_value=direct_value,
        direct_sigma=direct_sigma,
        fit_value=fit_value,
        fit_sigma=fit_sigma,
        boundary_warning=boundary,
    )


def overlay_theory(fit: FitResult, kind: SqlKind, lambda_grid) -> CurveTable:
    """Theory noise-improvement curve at the fitted parameters.

    Args:
        fit: fitted parameters to evaluate.
        kind: shot-noise convention for the improvement.
        lambda_grid: strictly increasing weights in [0, 1].

    Returns:
        Table with columns (lambda, snri_db).
    """
    grid = metrology._validate_grid("lambda_grid", lambda_grid, 0.0, 1.0)
    params = fit.params()
    rows = np.empty((grid.size, 2))
    for i, lam in enumerate(grid):
        rows[i] = (lam, metrology.snri(params, float(lam), kind))
    meta = {
        "gain": fit.gain,
        "eta_p": fit.eta_p,
        "eta_c": fit.eta_c,
        "scale_db": fit.scale_db,
        "sql_kind": kind.value,
    }
    return CurveTable(f"snri_overlay_{kind.value}", ("lambda", "snri_db"), rows, meta)


def lambda_opt_vs_gain_report(
    datasets: Sequence[NoiseDataset],
    options: FitOptions | None = None,
    reference_etas: tuple[float, float] = (0.745, 0.775),
) -> CurveTable:
    """Fitted optimal weight across scans taken at different gains.

    Each dataset is fitted independently; rows are sorted by fitted gain
    and carry the extracted weight with uncertainty next to the
    closed-form curve at fixed reference transmissions.  Scans that fail
    to fit are skipped and recorded in the table metadata.

    Args:
        datasets: at least two scans.
        options: fit settings shared by all scans.
        reference_etas: (eta_p, eta_c) of the reference theory column.

    Returns:
        Table with columns (gain, sigma_gain, lambda_opt,
        sigma_lambda_opt, lambda_opt_theory).

    Raises:
        ValueError: fewer than two scans given, fewer than two fits
            succeed, or two scans fit to the same gain.
    """
    if len(datasets) < 2:
        raise ValueError("need at least 2 datasets")
    ref_p, ref_c = float(reference_etas[0]), float(reference_etas[1])
    rows = []
    failures: list[str] = []
    for i, ds in enumerate(datasets):
        try:
            fit = fit_noise_curve(ds, options)
            est = extract_lambda_opt(ds, fit)
        except (FitFailure, ValueError) as exc:
            failures.append(f"dataset[{i}] ({ds.source}): {exc}")
            continue
        theory = metrology.lambda_opt(
            InterferometerParams(gain=fit.gain, eta_p=ref_p, eta_c=ref_c)
        )
        rows.append((fit.gain, fit.sigma_gain, est.value, est.sigma, theory))
    if len(rows) < 2:
        raise ValueError(
            "fewer than 2 scans fitted successfully: " + "; ".join(failures)
        )
    rows.sort(key=lambda row: row[0])
    gains = [row[0] for row in rows]
    if any(g2 - g1 <= 0.0 for g1, g2 in zip(gains, gains[1:])):
        raise ValueError("fitted gains must be distinct to tabulate against gain")
    meta = {"eta_p_ref": ref_p, "eta_c_ref": ref_c}
    if failures:
        meta["failures"] = "; ".join(failures)
    columns = ("gain", "sigma_gain", "lambda_opt", "sigma_lambda_opt", "lambda_opt_theory")
    return CurveTable("lambda_opt_vs_gain_fitted", columns, np.array(rows), meta)

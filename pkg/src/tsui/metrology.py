"""Closed-form noise and phase-sensitivity figures for the interferometer.

The joint readout M = Y_p + lam * Y_c of a lossy seeded amplifier has a
variance quadratic in the weight lam,

    Var(M) = V_p + lam^2 V_c + 2 lam C,
    V_i = eta_i cosh(2r) + (1 - eta_i),   C = -sqrt(eta_p eta_c) sinh(2r),

which this module minimizes, converts to phase sensitivity via the
displaced fringe slope d<M>/dphi = 2 sqrt(eta_p G) alpha, and compares
against shot-noise and quantum Cramer-Rao benchmarks.  Curve generators
produce the tables behind the standard figures of the project.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gaussian import (
    InterferometerParams,
    WeightedMeasurement,
    apply_loss,
    joint_quadrature_stats,
    photon_moments,
    seeded_tmss,
)

__all__ = [
    "LOG2_DB",
    "CurveTable",
    "NoiseResult",
    "SensitivityResult",
    "SqlKind",
    "UnsupportedConfigurationError",
    "curve_lambda_opt_vs_gain",
    "curve_noise_vs_lambda",
    "curve_sensitivity_vs_gain",
    "curve_snri_vs_lambda",
    "joint_noise_power",
    "joint_variance_quadratic",
    "lambda_opt",
    "lambda_opt_numeric",
    "phase_sensitivity",
    "qcrb",
    "snri",
    "sql_sensitivity",
]

# dB gap between the two shot-noise conventions, 10*log10(2).
LOG2_DB = 10.0 * math.log10(2.0)


class UnsupportedConfigurationError(ValueError):
    """A benchmark was requested outside its domain of validity."""


class SqlKind(enum.Enum):
    """Shot-noise reference used for sensitivities and improvements.

    SQL1 references two coherent beams hitting both detectors (joint
    variance 2); SQL2 references a single coherent beam of the same probe
    power on the probe detector alone (variance 1).  Both use the same
    fringe slope, so they differ by exactly 3.01 dB everywhere.
    """

    SQL1 = "sql1"
    SQL2 = "sql2"


@dataclass(frozen=True)
class NoiseResult:
    """Joint-quadrature noise power at one measurement weight."""

    variance: float
    variance_db: float
    lam: float


@dataclass(frozen=True)
class SensitivityResult:
    """Smallest detectable phase, with optional SNR for a given dphi."""

    delta_phi: float
    snr_db: float | None = None


@dataclass
class CurveTable:
    """Column-oriented numeric table with provenance metadata.

    The first column is the abscissa and must be strictly increasing;
    all values must be finite.  Serializes to CSV (metadata as ``#``
    comment lines, full round-trip precision) and to JSON.
    """

    label: str
    columns: tuple[str, ...]
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.columns = tuple(str(c) for c in self.columns)
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ValueError(
                f"rows must be 2-D with {len(self.columns)} columns, "
                f"got shape {rows.shape}"
            )
        if rows.shape[0] < 1:
            raise ValueError("table must have at least one row")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        if not np.all(np.isfinite(rows)):
            raise ValueError("table values must be finite")
        if np.any(np.diff(rows[:, 0]) <= 0.0):
            raise ValueError(f"abscissa {self.columns[0]!r} must be strictly increasing")
        self.rows = rows

    @staticmethod
    def _fmt(value: float) -> str:
        # Shortest decimal string that round-trips the float exactly.
        return np.format_float_positional(value, unique=True, trim="0")

    def csv_text(self) -> str:
        lines = [f"# label = {self.label}"]
        for key in sorted(self.meta):
            lines.append(f"# {key} = {self.meta[key]}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(self._fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        payload = {
            "label": self.label,
            "meta": self.meta,
            "columns": list(self.columns),
            "rows": [
                {c: float(v) for c, v in zip(self.columns, row)}
                for row in self.rows
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.json_text())


def joint_variance_quadratic(gain, eta_p, eta_c):
    """Coefficients (V_p, V_c, C) of Var(M) = V_p + lam^2 V_c + 2 lam C.

    Accepts scalars or numpy arrays (broadcast together).  This is the
    single source of the noise model shared by the theory curves and the
    curve fitter.
    """
    gain = np.asarray(gain, dtype=float)
    if np.any(gain < 1.0):
        raise ValueError("gain must be >= 1")
    cosh2r = 2.0 * gain - 1.0
    sinh2r = 2.0 * np.sqrt(gain * (gain - 1.0))
    v_p = eta_p * cosh2r + (1.0 - np.asarray(eta_p, dtype=float))
    v_c = eta_c * cosh2r + (1.0 - np.asarray(eta_c, dtype=float))
    cross = -np.sqrt(np.asarray(eta_p, dtype=float) * eta_c) * sinh2r
    return v_p, v_c, cross


def lambda_opt(params: InterferometerParams) -> float:
    """Noise-minimizing weight for the joint readout, in closed form.

    The unconstrained minimum of the variance quadratic is

        lam* = sqrt(eta_p eta_c) sinh(2r) / (1 - eta_c + eta_c cosh(2r)),

    clamped to the physical attenuator range [0, 1] (strongly asymmetric
    loss with eta_c << eta_p can push the raw ratio above 1).  Lossless
    it reduces to tanh(2r).

    Args:
        params: amplifier and transmission settings.

    Returns:
        The clamped optimal weight.
    """
    two_r = 2.0 * params.r
    numer = math.sqrt(params.eta_p * params.eta_c) * math.sinh(two_r)
    denom = 1.0 - params.eta_c + params.eta_c * math.cosh(two_r)
    return min(max(numer / denom, 0.0), 1.0)


def lambda_opt_numeric(params: InterferometerParams, tol: float = 1e-10) -> float:
    """Optimal weight found by searching the measured variance directly.

    Golden-section search over lam in [0, 1] on the variance of the
    loss-propagated state brackets the minimum to width ``tol``; a final
    three-point parabolic interpolation (exact for this quadratic
    objective, up to round-off) removes the flat-bottom ambiguity of
    comparing nearly equal variances.  Serves as an independent check of
    :func:`lambda_opt`; it never evaluates the closed form.

    Args:
        params: amplifier and transmission settings.
        tol: final golden-section bracket width.

    Returns:
        The minimizing weight in [0, 1].
    """
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol!r}")
    state = apply_loss(seeded_tmss(params), params.eta_p, params.eta_c)

    def var(lam: float) -> float:
        return joint_quadrature_stats(state, lam)[1]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = var(c), var(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = var(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = var(d)
    x = 0.5 * (a + b)
    # Parabola through three samples around x; the objective is exactly
    # quadratic in lam, so the vertex is exact up to round-off.
    h = 1e-4
    lo = min(max(x - h, 0.0), 1.0 - 2.0 * h)
    p0, p1, p2 = lo, lo + h, lo + 2.0 * h
    f0, f1, f2 = var(p0), var(p1), var(p2)
    denom = f0 - 2.0 * f1 + f2
    if denom > 0.0:
        vertex = p1 + 0.5 * h * (f0 - f2) / denom
        return min(max(vertex, 0.0), 1.0)
    return x


def joint_noise_power(
    params: InterferometerParams, m: "WeightedMeasurement | float"
) -> NoiseResult:
    """Joint-quadrature noise power at weight lam, relative to shot noise.

    Args:
        params: amplifier and transmission settings.
        m: measurement weight (``WeightedMeasurement`` or float in [0, 1]).

    Returns:
        :class:`NoiseResult` with the variance in shot-noise units and in
        dB (0 dB is the single-beam shot-noise level).
    """
    lam = m.lam if isinstance(m, WeightedMeasurement) else WeightedMeasurement(float(m)).lam
    v_p, v_c, cross = joint_variance_quadratic(params.gain, params.eta_p, params.eta_c)
    var = float(v_p + lam * lam * v_c + 2.0 * lam * cross)
    return NoiseResult(variance=var, variance_db=10.0 * math.log10(var), lam=lam)


def phase_sensitivity(
    params: InterferometerParams,
    m: "WeightedMeasurement | float",
    dphi: float | None = None,
) -> SensitivityResult:
    """Phase sensitivity of the joint readout for a bright seed.

    The smallest detectable phase is the noise divided by the squared
    fringe slope,

        (delta phi)^2 = Var(M) / (2 sqrt(eta_p G) alpha)^2.

    Args:
        params: settings; ``alpha`` must be positive (no fringe otherwise).
        m: measurement weight.
        dphi: optional applied phase; when given, the result also carries
            the power signal-to-noise ratio of that phase in dB.

    Returns:
        :class:`SensitivityResult`.
    """
    if params.alpha <= 0.0:
        raise ValueError("phase sensitivity requires a bright seed (alpha > 0)")
    noise = joint_noise_power(params, m)
    slope = 2.0 * math.sqrt(params.eta_p * params.gain) * params.alpha
    delta_phi = math.sqrt(noise.variance) / slope
    snr_db = None
    if dphi is not None:
        dphi = float(dphi)
        if dphi <= 0.0 or not math.isfinite(dphi):
            raise ValueError(f"dphi must be positive and finite, got {dphi!r}")
        snr_db = 10.0 * math.log10((slope * dphi) ** 2 / noise.variance)
    return SensitivityResult(delta_phi=delta_phi, snr_db=snr_db)


def sql_sensitivity(kind: SqlKind, params: InterferometerParams) -> SensitivityResult:
    """Shot-noise-limited phase sensitivity at the same fringe slope.

    Args:
        kind: which shot-noise convention to reference (see
            :class:`SqlKind`).
        params: settings; ``alpha`` must be positive.

    Returns:
        :class:`SensitivityResult` for the reference measurement.
    """
    if not isinstance(kind, SqlKind):
        raise ValueError(f"kind must be a SqlKind, got {kind!r}")
    if params.alpha <= 0.0:
        raise ValueError("shot-noise sensitivity requires alpha > 0")
    var = 2.0 if kind is SqlKind.SQL1 else 1.0
    slope = 2.0 * math.sqrt(params.eta_p * params.gain) * params.alpha
    return SensitivityResult(delta_phi=math.sqrt(var) / slope)


def qcrb(params: InterferometerParams) -> SensitivityResult:
    """Quantum Cramer-Rao phase bound for the lossless probe arm.

    The bound is 1/sqrt(F_Q) with F_Q = 4 Var(n_probe); for the seeded
    amplifier output F_Q = sinh^2(2r) + 4 G alpha^2 cosh(2r).  Only the
    lossless case is supported: with loss the probe mode alone no longer
    determines the attainable bound.

    Args:
        params: settings with ``eta_p == eta_c == 1``.

    Returns:
        :class:`SensitivityResult` with the bound.

    Raises:
        UnsupportedConfigurationError: if either transmission is below 1.
        ValueError: if the state carries no phase information (G = 1 and
            alpha = 0).
    """
    if params.eta_p != 1.0 or params.eta_c != 1.0:
        raise UnsupportedConfigurationError(
            "the quantum bound is only computed for eta_p = eta_c = 1"
        )
    fisher = 4.0 * photon_moments(seeded_tmss(params), "probe").var_n
    if fisher <= 0.0:
        raise ValueError("state carries no phase information (G = 1, alpha = 0)")
    return SensitivityResult(delta_phi=1.0 / math.sqrt(fisher))


def snri(
    params: InterferometerParams,
    m: "WeightedMeasurement | float",
    kind: SqlKind,
) -> float:
    """Squeezing-noise-reduction improvement over a shot-noise reference.

    Signal slopes cancel between the joint readout and the reference, so
    the improvement is pure noise contrast:

        SNRI_SQL2 = -10 log10 Var(M),    SNRI_SQL1 = SNRI_SQL2 + 10 log10 2.

    The SQL1 value is produced by adding the constant offset to the SQL2
    code path, so the two kinds differ by exactly ``LOG2_DB``.

    Args:
        params: amplifier and transmission settings.
        m: measurement weight.
        kind: shot-noise convention.

    Returns:
        Improvement in dB (positive means better than the reference).
    """
    if not isinstance(kind, SqlKind):
        raise ValueError(f"kind must be a SqlKind, got {kind!r}")
    base = -joint_noise_power(params, m).variance_db
    if kind is SqlKind.SQL1:
        return base + LOG2_DB
    return base


def _validate_grid(name: str, grid, lower: float, upper: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError(f"{name} must be a 1-D grid with at least 2 points")
    if not np.all(np.isfinite(grid)):
        raise ValueError(f"{name} must be finite")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError(f"{name} must be strictly increasing")
    if grid[0] < lower or grid[-1] > upper:
        raise ValueError(f"{name} must lie within [{lower:g}, {upper:g}]")
    return grid


def curve_noise_vs_lambda(
    params: InterferometerParams, lambda_grid
) -> CurveTable:
    """Joint noise power versus measurement weight at fixed settings.

    Args:
        params: amplifier and transmission settings.
        lambda_grid: strictly increasing weights in [0, 1].

    Returns:
        Table with columns (lambda, variance, noise_db).
    """
    grid = _validate_grid("lambda_grid", lambda_grid, 0.0, 1.0)
    rows = np.empty((grid.size, 3))
    for i, lam in enumerate(grid):
        res = joint_noise_power(params, float(lam))
        rows[i] = (lam, res.variance, res.variance_db)
    meta = {
        "gain": params.gain,
        "eta_p": params.eta_p,
        "eta_c": params.eta_c,
        "alpha": params.alpha,
        "lambda_opt": lambda_opt(params),
    }
    return CurveTable("noise_vs_lambda", ("lambda", "variance", "noise_db"), rows, meta)


def _eta_pair(entry) -> tuple[float, float]:
    if isinstance(entry, (tuple, list)):
        if len(entry) != 2:
            raise ValueError(f"eta entry must be a float or a pair, got {entry!r}")
        return float(entry[0]), float(entry[1])
    return float(entry), float(entry)


def curve_lambda_opt_vs_gain(eta_list: Sequence, gain_grid) -> CurveTable:
    """Optimal weight versus gain for several transmission settings.

    Args:
        eta_list: transmissions, each either a single eta used for both
            arms or an ``(eta_p, eta_c)`` pair; one output column each.
        gain_grid: strictly increasing gains, all >= 1.

    Returns:
        Table with columns (gain, lambda_opt_<tag>...).
    """
    grid = _validate_grid("gain_grid", gain_grid, 1.0, math.inf)
    if len(eta_list) < 1:
        raise ValueError("eta_list must not be empty")
    pairs = [_eta_pair(e) for e in eta_list]
    columns = ["gain"]
    for ep, ec in pairs:
        tag = f"ep{ep:g}_ec{ec:g}"
        columns.append(f"lambda_opt_{tag}")
    if len(set(columns)) != len(columns):
        raise ValueError("eta_list entries must be distinct")
    rows = np.empty((grid.size, len(columns)))
    rows[:, 0] = grid
    for j, (ep, ec) in enumerate(pairs, start=1):
        for i, g in enumerate(grid):
            rows[i, j] = lambda_opt(InterferometerParams(gain=float(g), eta_p=ep, eta_c=ec))
    meta = {"etas": "; ".join(f"({ep:g}, {ec:g})" for ep, ec in pairs)}
    return CurveTable("lambda_opt_vs_gain", tuple(columns), rows, meta)


def curve_sensitivity_vs_gain(alpha: float, gain_grid) -> CurveTable:
    """Lossless phase sensitivity versus gain, three ways.

    Compares the balanced joint readout (lam = 1), the optimally weighted
    readout, and the quantum bound, all scaled by the seed amplitude so
    the columns are alpha * delta_phi (dimensionless, 0.5 at shot noise
    for a single coherent beam).

    Args:
        alpha: seed amplitude, > 0.
        gain_grid: strictly increasing gains, all >= 1.

    Returns:
        Table with columns
        (gain, alpha_dphi_balanced, alpha_dphi_optimal, alpha_dphi_qcrb).
    """
    alpha = float(alpha)
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha!r}")
    grid = _validate_grid("gain_grid", gain_grid, 1.0, math.inf)
    rows = np.empty((grid.size, 4))
    for i, g in enumerate(grid):
        params = InterferometerParams(gain=float(g), alpha=alpha)
        balanced = phase_sensitivity(params, 1.0).delta_phi
        optimal = phase_sensitivity(params, lambda_opt(params)).delta_phi
        bound = qcrb(params).delta_phi
        rows[i] = (g, alpha * balanced, alpha * optimal, alpha * bound)
    columns = ("gain", "alpha_dphi_balanced", "alpha_dphi_optimal", "alpha_dphi_qcrb")
    return CurveTable("sensitivity_vs_gain", columns, rows, {"alpha": alpha})


def curve_snri_vs_lambda(
    params_list: Sequence[InterferometerParams], lambda_grid
) -> CurveTable:
    """Noise improvement versus weight for several parameter settings.

    Args:
        params_list: one or more settings; each contributes an SQL2 and
            an SQL1 column.
        lambda_grid: strictly increasing weights in [0, 1].

    Returns:
        Table with columns (lambda, snri_sql2_<tag>..., snri_sql1_<tag>...).
    """
    grid = _validate_grid("lambda_grid", lambda_grid, 0.0, 1.0)
    if len(params_list) < 1:
        raise ValueError("params_list must not be empty")
    tags = []
    for k, p in enumerate(params_list):
        tag = f"G{p.gain:g}"
        if p.eta_p != 1.0 or p.eta_c != 1.0:
            tag += f"_ep{p.eta_p:g}_ec{p.eta_c:g}"
        if tag in tags:
            tag += f"_{k}"
        tags.append(tag)
    columns = ["lambda"]
    columns += [f"snri_sql2_{t}" for t in tags]
    columns += [f"snri_sql1_{t}" for t in tags]
    rows = np.empty((grid.size, len(columns)))
    rows[:, 0] = grid
    for i, lam in enumerate(grid):
        for k, p in enumerate(params_list):
            rows[i, 1 + k] = snri(p, float(lam), SqlKind.SQL2)
            rows[i, 1 + len(params_list) + k] = snri(p, float(lam), SqlKind.SQL1)
    meta = {
        "settings": "; ".join(
            f"(G={p.gain:g}, ep={p.eta_p:g}, ec={p.eta_c:g})" for p in params_list
        ),
        "sql_offset_db": LOG2_DB,
    }
    return CurveTable("snri_vs_lambda", tuple(columns), rows, meta)

"""Number-basis oracle for the seeded amplifier.

Everything here recomputes the moments of :mod:`tsui.gaussian` by brute
force in a truncated Fock space, without touching covariance-matrix
algebra.  It exists to cross-check the Gaussian code path and is not
meant to be fast or to scale to bright seeds.

The pure amplifier output is built by applying exp(r (ad_p ad_c - a_p a_c))
to |alpha, 0> with a sparse matrix exponential.  Loss is applied as an
explicit Kraus ensemble of photon-loss branches, kept as separate pure
states (the mixtures stay small because expectation values are linear in
the branches).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

__all__ = [
    "DEFAULT_PAD",
    "FockEnsemble",
    "FockState",
    "TruncationError",
    "TruncationReport",
    "apply_loss_fock",
    "build_seeded_tmss_fock",
    "oracle_mode_quadrature",
    "oracle_moment_bundle",
    "oracle_photon_moments",
    "oracle_photon_variance",
    "oracle_quadrature_stats",
    "oracle_quadrature_variance",
]

# Extra Fock levels used while exponentiating the squeezer so that
# population pushed past the requested cutoff is represented rather than
# reflected.  16 levels keep the boundary error of retained amplitudes
# below ~1e-12 for the gains this oracle is used at.
DEFAULT_PAD = 16

# A state is rejected when more than this much probability lies outside
# the retained (cutoff + 1)^2 block.
NORM_DEFICIT_LIMIT = 1e-4


class TruncationError(RuntimeError):
    """Raised when the retained Fock block misses too much probability."""

    def __init__(self, report: "TruncationReport") -> None:
        super().__init__(
            f"norm deficit {report.norm_deficit:.3e} outside the "
            f"(cutoff={report.cutoff}) block exceeds {NORM_DEFICIT_LIMIT:.0e}; "
            "raise the cutoff or reduce gain/alpha"
        )
        self.report = report


@dataclass(frozen=True)
class TruncationReport:
    """Probability mass lost to truncation when building a state."""

    cutoff: int
    pad: int
    norm_deficit: float


@dataclass
class FockState:
    """Pure two-mode state as a (cutoff+1, cutoff+1) amplitude matrix.

    ``amplitudes[n_p, n_c]`` is the coefficient of |n_p, n_c>.  States
    are stored unnormalized (norm tracks the truncation deficit).
    """

    amplitudes: np.ndarray
    cutoff: int

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass
class FockEnsemble:
    """Unnormalized pure-state branches of a lossy state.

    ``branches[k]`` is the amplitude matrix conditioned on the k-th loss
    outcome; branch weights are the squared norms, and the ensemble as a
    whole represents their incoherent mixture.
    """

    branches: np.ndarray  # shape (n_branches, cutoff + 1, cutoff + 1)
    cutoff: int

    def total_weight(self) -> float:
        return float(np.vdot(self.branches, self.branches).real)


def _coherent_amplitudes(alpha: float, dim: int) -> np.ndarray:
    # c_n = exp(-|a|^2/2) a^n / sqrt(n!), built by the stable recurrence
    # c_n = c_{n-1} * a / sqrt(n).
    c = np.empty(dim)
    c[0] = math.exp(-0.5 * alpha * alpha)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def _two_mode_squeezer(r: float, dim: int) -> sparse.csr_matrix:
    # Generator r * (ad_p ad_c - a_p a_c) on the flattened |n_p, n_c> grid.
    sq = np.sqrt(np.arange(1, dim))
    a = sparse.diags(sq, 1, shape=(dim, dim))
    ad = sparse.diags(sq, -1, shape=(dim, dim))
    return (r * (sparse.kron(ad, ad) - sparse.kron(a, a))).tocsr()


def build_seeded_tmss_fock(
    gain: float,
    alpha: float = 0.0,
    cutoff: int = 40,
    pad: int = DEFAULT_PAD,
) -> tuple[FockState, TruncationReport]:
    """Seeded two-mode squeezed state by direct matrix exponentiation.

    Args:
        gain: amplifier intensity gain G >= 1.
        alpha: coherent seed amplitude on the probe mode.
        cutoff: highest retained photon number per mode.
        pad: extra working levels per mode during the exponentiation.

    Returns:
        ``(state, report)`` where ``state`` holds the retained block and
        ``report`` the probability left outside it.

    Raises:
        TruncationError: if the deficit exceeds ``NORM_DEFICIT_LIMIT``.
    """
    if gain < 1.0 or not math.isfinite(gain):
        raise ValueError(f"gain must be >= 1, got {gain!r}")
    if alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha!r}")
    if cutoff < 1 or pad < 0:
        raise ValueError("cutoff must be >= 1 and pad >= 0")
    r = math.acosh(math.sqrt(gain))
    dim = cutoff + 1 + pad
    seed = np.zeros((dim, dim))
    seed[:, 0] = _coherent_amplitudes(alpha, dim)
    gen = _two_mode_squeezer(r, dim)
    out = expm_multiply(gen, seed.reshape(-1)).reshape(dim, dim)
    kept = out[: cutoff + 1, : cutoff + 1].copy()
    total = float(np.vdot(out, out).real)
    deficit = max(total - float(np.vdot(kept, kept).real), 0.0)
    # The padded box itself leaks a little; count that as deficit too.
    deficit += max(1.0 - total, 0.0)
    report = TruncationReport(cutoff=cutoff, pad=pad, norm_deficit=deficit)
    if deficit > NORM_DEFICIT_LIMIT:
        raise TruncationError(report)
    return FockState(amplitudes=kept, cutoff=cutoff), report


def _loss_kraus(eta: float, dim: int) -> np.ndarray:
    # K_k[n - k, n] = sqrt(binom(n, k) eta^(n-k) (1 - eta)^k); log-space
    # binomials keep large n stable.
    ks = np.arange(dim)
    ns = np.arange(dim)
    kraus = np.zeros((dim, dim, dim))
    if eta == 1.0:
        kraus[0] = np.eye(dim)
        return kraus
    log_eta = math.log(eta) if eta > 0.0 else -math.inf
    log_one_minus = math.log1p(-eta)
    for k in ks:
        n = ns[k:]
        log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        with np.errstate(invalid="ignore"):
            log_w = log_binom + (n - k) * log_eta + k * log_one_minus
        # eta == 0 and n == k gives 0 * -inf above; that weight is 1.
        if eta == 0.0:
            log_w = log_binom + k * log_one_minus
            log_w[n != k] = -math.inf
        kraus[k, n - k, n] = np.exp(0.5 * log_w)
    return kraus


def _as_branches(state: "FockState | FockEnsemble") -> np.ndarray:
    if isinstance(state, FockState):
        return state.amplitudes[np.newaxis, :, :]
    return state.branches


def apply_loss_fock(
    state: "FockState | FockEnsemble", eta: float, mode: str
) -> FockEnsemble:
    """Apply a photon-loss channel to one mode, branch by branch.

    Args:
        state: pure state or ensemble to attenuate.
        eta: power transmission in [0, 1].
        mode: "probe" (first index) or "conjugate" (second index).

    Returns:
        A :class:`FockEnsemble` with one branch per (input branch, number
        of lost photons) pair; zero-weight branches are dropped.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    if mode not in ("probe", "conjugate"):
        raise ValueError(f"unknown mode {mode!r}")
    branches = _as_branches(state)
    dim = branches.shape[1]
    kraus = _loss_kraus(eta, dim)
    if mode == "probe":
        new = np.einsum("kij,bjc->kbic", kraus, branches)
    else:
        new = np.einsum("bij,kcj->kbic", branches, kraus)
    new = new.reshape(-1, dim, dim)
    weights = np.einsum("bij,bij->b", new.conj(), new).real
    keep = weights > 0.0
    cutoff = dim - 1
    return FockEnsemble(branches=new[keep], cutoff=cutoff)


def _quadrature_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    sq = np.sqrt(np.arange(1, dim))
    x = np.zeros((dim, dim))
    x[np.arange(dim - 1), np.arange(1, dim)] = sq
    x = x + x.T
    y = np.zeros((dim, dim), dtype=complex)
    y[np.arange(dim - 1), np.arange(1, dim)] = -1j * sq
    y = y + y.conj().T
    return x, y


def _antisym_phase_op(dim: int) -> np.ndarray:
    # k = i Y = a - a^dag, real and antisymmetric; for real amplitude
    # matrices ||k psi|| = ||Y psi|| and psi . (k psi) vanishes exactly,
    # so Y moments can be taken entirely in real arithmetic.
    sq = np.sqrt(np.arange(1, dim))
    k = np.zeros((dim, dim))
    k[np.arange(dim - 1), np.arange(1, dim)] = sq
    return k - k.T


def _apply_probe(op: np.ndarray, branches: np.ndarray) -> np.ndarray:
    return np.einsum("ij,bjc->bic", op, branches)


def _apply_conjugate(op: np.ndarray, branches: np.ndarray) -> np.ndarray:
    # (I x op) psi = psi op^T on the amplitude matrix.
    return np.einsum("bij,cj->bic", branches, op)


def oracle_moment_bundle(
    state: "FockState | FockEnsemble", lambdas
) -> dict:
    """Every oracle moment of a (real-amplitude) state in one pass.

    Shares the expensive operator applications across all requested
    moments, which matters for large loss ensembles.  Phase-quadrature
    moments use the real antisymmetric form of Y (see
    :func:`_antisym_phase_op`); the corresponding means are exact zeros
    for the real states this oracle produces.

    Args:
        state: pure state or loss ensemble with real amplitudes.
        lambdas: iterable of joint-readout weights in [0, 1].

    Returns:
        Dict with ``"probe"`` and ``"conjugate"`` entries mapping
        ``{"x": (mean, var), "y": (mean, var), "n": (mean, var)}``, and a
        ``"joint"`` list of ``(lam, mean, var)`` tuples.
    """
    branches = _as_branches(state)
    if np.iscomplexobj(branches):
        raise ValueError("bundle path expects real amplitudes")
    lambdas = [float(l) for l in lambdas]
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {lam!r}")
    dim = branches.shape[1]
    total = float(np.vdot(branches, branches).real)
    if total <= 0.0:
        raise ValueError("state has zero norm")
    x, _ = _quadrature_ops(dim)
    k = _antisym_phase_op(dim)
    n = np.arange(dim, dtype=float)

    applied = {
        ("probe", "x"): _apply_probe(x, branches),
        ("probe", "k"): _apply_probe(k, branches),
        ("conjugate", "x"): _apply_conjugate(x, branches),
        ("conjugate", "k"): _apply_conjugate(k, branches),
        ("probe", "n"): n[np.newaxis, :, np.newaxis] * branches,
        ("conjugate", "n"): n[np.newaxis, np.newaxis, :] * branches,
    }

    def stats(app: np.ndarray, mean: float | None = None) -> tuple[float, float]:
        if mean is None:
            mean = float(np.vdot(branches, app)) / total
        second = float(np.vdot(app, app)) / total
        return mean, second - mean * mean

    out: dict = {}
    for mode in ("probe", "conjugate"):
        out[mode] = {
            "x": stats(applied[(mode, "x")]),
            "y": stats(applied[(mode, "k")], mean=0.0),
            "n": stats(applied[(mode, "n")]),
        }
    joint = []
    for lam in lambdas:
        app = applied[("probe", "k")] + lam * applied[("conjugate", "k")]
        mean, var = stats(app, mean=0.0)
        joint.append((lam, mean, var))
    out["joint"] = joint
    return out


def _ensemble_stats(
    branches: np.ndarray, apply_op
) -> tuple[float, float]:
    # <M> and <M^2> over the (unnormalized) branch mixture; apply_op maps
    # the branch array to M|psi_b> for all branches at once.
    total = float(np.vdot(branches, branches).real)
    if total <= 0.0:
        raise ValueError("state has zero norm")
    applied = apply_op(branches)
    first = float(np.vdot(branches, applied).real) / total
    second = float(np.vdot(applied, applied).real) / total
    return first, second - first * first


def oracle_quadrature_stats(
    state: "FockState | FockEnsemble", lam: float
) -> tuple[float, float]:
    """Mean and variance of Y_p + lam * Y_c evaluated in the Fock basis.

    Args:
        state: pure state or loss ensemble.
        lam: measurement weight in [0, 1].

    Returns:
        ``(mean, variance)`` of the joint phase quadrature.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam!r}")
    branches = _as_branches(state).astype(complex)
    dim = branches.shape[1]
    _, y = _quadrature_ops(dim)

    def apply_op(b: np.ndarray) -> np.ndarray:
        # M psi = Y psi (probe index) + lam * psi Y^T (conjugate index).
        return np.einsum("ij,bjc->bic", y, b) + lam * np.einsum(
            "bij,cj->bic", b, y
        )

    return _ensemble_stats(branches, apply_op)


def oracle_quadrature_variance(
    state: "FockState | FockEnsemble", lam: float
) -> float:
    """Variance of the joint readout; see :func:`oracle_quadrature_stats`."""
    return oracle_quadrature_stats(state, lam)[1]


def oracle_mode_quadrature(
    state: "FockState | FockEnsemble", mode: str, quadrature: str
) -> tuple[float, float]:
    """Mean and variance of a single-mode quadrature, Fock-basis route.

    Args:
        state: pure state or loss ensemble.
        mode: "probe" or "conjugate".
        quadrature: "x" (amplitude) or "y" (phase).

    Returns:
        ``(mean, variance)`` of the requested quadrature.
    """
    if mode not in ("probe", "conjugate"):
        raise ValueError(f"unknown mode {mode!r}")
    if quadrature not in ("x", "y"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    branches = _as_branches(state).astype(complex)
    dim = branches.shape[1]
    x, y = _quadrature_ops(dim)
    op = x if quadrature == "x" else y

    if mode == "probe":
        apply_op = lambda b: np.einsum("ij,bjc->bic", op, b)
    else:
        apply_op = lambda b: np.einsum("bij,cj->bic", b, op)
    return _ensemble_stats(branches, apply_op)


def oracle_photon_moments(
    state: "FockState | FockEnsemble", mode: str
) -> tuple[float, float]:
    """Photon-number mean and variance of one mode, Fock-basis route.

    Args:
        state: pure state or loss ensemble.
        mode: "probe" or "conjugate".

    Returns:
        ``(mean_n, var_n)`` for the requested mode.
    """
    if mode not in ("probe", "conjugate"):
        raise ValueError(f"unknown mode {mode!r}")
    branches = _as_branches(state)
    dim = branches.shape[1]
    n = np.arange(dim, dtype=float)

    if mode == "probe":
        apply_op = lambda b: n[np.newaxis, :, np.newaxis] * b
    else:
        apply_op = lambda b: n[np.newaxis, np.newaxis, :] * b
    return _ensemble_stats(branches, apply_op)


def oracle_photon_variance(state: "FockState | FockEnsemble", mode: str) -> float:
    """Photon-number variance; see :func:`oracle_photon_moments`."""
    return oracle_photon_moments(state, mode)[1]

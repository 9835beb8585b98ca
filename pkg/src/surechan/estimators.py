"""Preamble channel estimators and Stein's unbiased risk estimate.

Every estimator maps a noisy CFR observation ``y = h + w``,
``w ~ CN(0, sigma2 I)``, to an estimate of ``h``. The SURE-based ones pick
their weights by minimizing the risk estimate

    eps = (||y||^2 - K sigma2 + ||f||^2 - 2 Re(y^H f) + 2 sigma2 Re(div f)) / K

where ``div f = sum_k df_k/dy_k`` is a Wirtinger (holomorphic) derivative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import ObservationPair, as_cvec, build_shift_matrix, dft, idft

COND_LIMIT = 1e12
DEFAULT_T_MULTIPLE = 12.0
T_GRID_BOUNDS = (0.5, 25.0)
T_GRID_POINTS = 25


class DegenerateObservationError(ValueError):
    """The normal equations for the SURE weights are numerically singular."""


@dataclass(frozen=True)
class RiskReport:
    epsilon: float
    divergence: complex
    components: tuple[float, float, float, float]
    K: int

    @property
    def combined(self) -> float:
        return sum(self.components) / self.K


@dataclass(frozen=True)
class SureLinearParams:
    L: int
    a: np.ndarray


@dataclass(frozen=True)
class SureLetParams:
    L: int
    a_dagger: np.ndarray
    T: float
    T_policy: str


def sure_risk(y, h_hat, divergence, sigma2: float) -> RiskReport:
    """Evaluate SURE for an estimate ``h_hat`` with the given divergence."""
    y = np.asarray(y, dtype=np.complex128)
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    if y.shape != h_hat.shape:
        raise ValueError(f"length mismatch: y {y.shape} vs h_hat {h_hat.shape}")
    K = y.size
    components = (
        float(np.vdot(y, y).real - K * sigma2),
        float(np.vdot(h_hat, h_hat).real),
        float(-2.0 * np.vdot(y, h_hat).real),
        float(2.0 * sigma2 * np.real(divergence)),
    )
    return RiskReport(sum(components) / K, complex(divergence), components, K)


# ---------------------------------------------------------------- baselines


def estimate_ml(obs: ObservationPair) -> np.ndarray:
    return obs.y.copy()


def _is_circulant(C: np.ndarray) -> bool:
    K = C.shape[0]
    idx = (np.arange(K)[:, None] - np.arange(K)[None, :]) % K
    return np.allclose(C, C[:, 0][idx], rtol=0, atol=1e-12 * max(1.0, np.abs(C).max()))


def lmmse_matrix(C_hh: np.ndarray, sigma2: float) -> np.ndarray:
    """Dense ``(C + sigma2 I)^-1 C`` via a Hermitian solve."""
    C = _check_hermitian(C_hh)
    K = C.shape[0]
    try:
        cf = scipy.linalg.cho_factor(C + sigma2 * np.eye(K))
    except np.linalg.LinAlgError as exc:
        raise DegenerateObservationError("C_hh + sigma2 I is singular") from exc
    return scipy.linalg.cho_solve(cf, C)


def _check_hermitian(C_hh) -> np.ndarray:
    C = np.asarray(C_hh, dtype=np.complex128)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"C_hh must be square, got shape {C.shape}")
    if not np.allclose(C, C.conj().T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(C).max())):
        raise ValueError("C_hh is not Hermitian")
    return C


def estimate_lmmse(obs: ObservationPair, C_hh, sigma2: float) -> np.ndarray:
    """``(C_hh + sigma2 I)^-1 C_hh y``.

    A circulant ``C_hh`` is diagonalized by the DFT and filtered per delay
    tap; anything else goes through the dense solve.
    """
    C = _check_hermitian(C_hh)
    K = obs.K
    if C.shape != (K, K):
        raise ValueError(f"C_hh shape {C.shape} does not match K={K}")
    if not _is_circulant(C):
        return lmmse_matrix(C, sigma2) @ obs.y
    # eigenvalues of a circulant matrix = unnormalized DFT of its first column
    lam = np.fft.fft(C[:, 0]).real
    denom = lam + sigma2
    if np.any(denom <= 1e-300):
        raise DegenerateObservationError("C_hh + sigma2 I is singular")
    return idft(lam / denom * dft(obs.y))


def lmmse_noiseless_limit(obs: ObservationPair, C_hh, rtol: float = 1e-10) -> np.ndarray:
    """Limit of the LMMSE filter as ``sigma2 -> 0+``: projection onto range(C_hh)."""
    C = _check_hermitian(C_hh)
    if C.shape != (obs.K, obs.K):
        raise ValueError(f"C_hh shape {C.shape} does not match K={obs.K}")
    if _is_circulant(C):
        lam = np.fft.fft(C[:, 0]).real
        return idft(np.where(lam > rtol * lam.max(), 1.0, 0.0) * dft(obs.y))
    w, V = np.linalg.eigh(C)
    Vr = V[:, w > rtol * w.max()]
    return Vr @ (Vr.conj().T @ obs.y)


def estimate_cir_threshold(obs: ObservationPair, sigma2_hat: float) -> np.ndarray:
    """Keep delay taps with ``|r_k|^2 >= 2 sigma2_hat``, zero the rest."""
    if sigma2_hat < 0:
        raise ValueError("sigma2_hat must be non-negative")
    r = obs.r
    return dft(np.where(np.abs(r) ** 2 >= 2.0 * sigma2_hat, r, 0.0))


def hard_threshold(r, T: float) -> np.ndarray:
    """Keep ``r_k`` where ``|r_k| >= T``. Reference point function only."""
    r = np.asarray(r, dtype=np.complex128)
    return np.where(np.abs(r) >= T, r, 0.0)


def soft_threshold(r, T: float) -> np.ndarray:
    """Shrink magnitudes by ``T`` keeping phase. Reference point function only."""
    r = np.asarray(r, dtype=np.complex128)
    mag = np.abs(r)
    scale = np.maximum(mag - T, 0.0) / np.where(mag > 0, mag, 1.0)
    return r * scale


def reference_thresholds(r, T: float) -> dict[str, np.ndarray]:
    if T < 0:
        raise ValueError("T must be non-negative")
    return {"hard": hard_threshold(r, T), "soft": soft_threshold(r, T)}


# ------------------------------------------------------------- SURE-linear


def _solve_normal(G: np.ndarray, rhs: np.ndarray):
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateObservationError(f"normal equations ill-conditioned (cond={cond:.3g})")
    cf = scipy.linalg.cho_factor(G)
    return scipy.linalg.cho_solve(cf, rhs), cf


def _centre(n: int, L: int) -> np.ndarray:
    a = np.zeros(n, dtype=np.complex128)
    a[L] = 1.0
    return a


def sure_linear_weights(Y: np.ndarray, y, sigma2: float) -> SureLinearParams:
    """Solve ``(Y^H Y) a = Y^H y - sigma2 b`` with ``b = K e_centre``."""
    y = as_cvec(y, "y")
    K, N = Y.shape
    if N % 2 == 0 or N > K:
        raise ValueError(f"Y must have an odd number of columns <= K, got {N}")
    L = N // 2
    if sigma2 == 0:
        # zero residual at the identity map; skip the (possibly singular) solve
        return SureLinearParams(L, _centre(N, L))
    b = np.zeros(N)
    b[L] = K
    a, _ = _solve_normal(Y.conj().T @ Y, Y.conj().T @ y - sigma2 * b)
    return SureLinearParams(L, a)


def estimate_sure_linear(obs: ObservationPair, sigma2: float, L: int = 1):
    """SURE-optimal ``2L+1``-tap cyclic smoother across subcarriers.

    Returns ``(h_hat, risk)``. ``risk`` carries the divergence of the whole
    data-adaptive map ``y -> Y(y) a(y)``, which keeps ``epsilon`` unbiased.
    """
    Y = build_shift_matrix(obs.y, L)
    params = sure_linear_weights(Y, obs.y, sigma2)
    h_hat = Y @ params.a
    if sigma2 == 0:
        return h_hat, sure_risk(obs.y, h_hat, obs.K, 0.0)
    beta = np.zeros(2 * L + 1)
    beta[L] = obs.K
    div = _adaptive_divergence(obs, Y, params.a, beta, L, sigma2, None)
    return h_hat, sure_risk(obs.y, h_hat, div, sigma2)


def estimate_james_stein(obs: ObservationPair, sigma2: float):
    """``(1 - K sigma2 / ||y||^2) y``, the single-weight case of SURE-linear."""
    return estimate_sure_linear(obs, sigma2, L=0)


def plugin_divergence(obs: ObservationPair, params) -> float:
    """Divergence with the weights held fixed (``beta^T a``)."""
    if isinstance(params, SureLinearParams):
        return obs.K * params.a[params.L]
    _, d = let_residual(obs.r, params.T)
    return obs.K * params.a_dagger[params.L] + d * params.a_dagger[-1]


# ----------------------------------------------------------------- SURE-LET


def let_residual(r, T: float):
    """``r * exp(-|r|^2/T)`` and its divergence ``sum exp(-u)(1-u)``."""
    if T <= 0:
        raise ValueError(f"threshold T must be positive, got {T}")
    r = np.asarray(r, dtype=np.complex128)
    u = np.abs(r) ** 2 / T
    e = np.exp(-u)
    return r * e, float(np.sum(e * (1.0 - u)))


def let_complement(r, T: float):
    """LET shrinkage ``r (1 - exp(-|r|^2/T))`` and its divergence."""
    r_t, d = let_residual(r, T)
    r = np.asarray(r, dtype=np.complex128)
    return r - r_t, r.size - d


@dataclass(frozen=True)
class _PointMap:
    """Derivatives of a pointwise delay-domain map needed for the divergence."""

    d_r: np.ndarray      # df/dr per tap
    d_rbar: np.ndarray   # df/d(conj r) per tap
    d_div: np.ndarray    # d(sum_n df_n/dr_n)/dr_k per tap


def _let_pointmap(r: np.ndarray, T: float, basis: str) -> _PointMap:
    u = np.abs(r) ** 2 / T
    e = np.exp(-u)
    d_r = e * (1.0 - u)
    d_rbar = -(r ** 2) * e / T
    d_div = e * (u - 2.0) * np.conj(r) / T
    if basis == "complement":
        return _PointMap(1.0 - d_r, -d_rbar, -d_div)
    return _PointMap(d_r, d_rbar, d_div)


def _adaptive_divergence(obs, B, a, beta, L, sigma2, pm: _PointMap | None) -> complex:
    """Divergence of ``y -> B(y) G(y)^-1 (B(y)^H y - sigma2 beta(y))``.

    ``B`` holds the ``2L+1`` shift columns and, when ``pm`` is given, one
    extra column ``dft(phi(r))`` for a pointwise map ``phi``.
    """
    K, n_cols = B.shape
    G = B.conj().T @ B
    M = scipy.linalg.solve(G, B.conj().T, assume_a="her").conj().T  # B G^-1
    div = complex(beta @ a) + n_cols  # fixed-weight part + tr(B G^-1 B^H)
    for j, lag in enumerate(range(-L, L + 1)):
        div -= a[j] * np.sum(M * np.conj(np.roll(B, lag, axis=0)))
    if pm is not None:
        t = n_cols - 1
        Mt, Bt = np.fft.ifft(M, axis=0, norm="ortho"), np.fft.ifft(B, axis=0, norm="ortho")
        div -= a[t] * np.sum(np.sum(Mt * Bt.conj(), axis=1) * pm.d_r)
        rho = obs.y - B @ a
        div += np.sum(M[:, t] * idft(np.conj(pm.d_rbar) * idft(rho)))
        div -= sigma2 * np.sum(M[:, t] * idft(pm.d_div))
    return div


def threshold_grid(sigma2: float, points: int = T_GRID_POINTS) -> np.ndarray:
    lo, hi = T_GRID_BOUNDS
    return np.geomspace(lo * sigma2, hi * sigma2, points)


def _let_solve(obs, sigma2, L, T, basis):
    Y = build_shift_matrix(obs.y, L)
    if basis == "residual":
        col, d = let_residual(obs.r, T)
    elif basis == "complement":
        col, d = let_complement(obs.r, T)
    else:
        raise ValueError(f"unknown LET basis {basis!r}")
    B = np.column_stack([Y, dft(col)])
    beta = np.zeros(2 * L + 2)
    beta[L] = obs.K
    beta[-1] = d
    a, _ = _solve_normal(B.conj().T @ B, B.conj().T @ obs.y - sigma2 * beta)
    h_hat = B @ a
    div = _adaptive_divergence(obs, B, a, beta, L, sigma2, _let_pointmap(obs.r, T, basis))
    return h_hat, a, sure_risk(obs.y, h_hat, div, sigma2)


def estimate_sure_let(
    obs: ObservationPair,
    sigma2: float,
    L: int = 1,
    T_policy: str = "fixed",
    T: float | None = None,
    T_multiple: float = DEFAULT_T_MULTIPLE,
    basis: str = "residual",
):
    """SURE-optimal combination of ``2L+1`` shifts of ``y`` and a LET term.

    ``T_policy="fixed"`` uses ``T`` if given, else ``T_multiple * sigma2``.
    ``T_policy="grid"`` scans :func:`threshold_grid` and keeps the ``T``
    with the lowest risk. Noiseless input has no noise scale, so ``T``
    then falls back to the mean delay-tap power.

    Returns ``(h_hat, SureLetParams, RiskReport)``.
    """
    if 2 * L + 2 > obs.K:
        raise ValueError(f"2L+2 must not exceed K={obs.K}")
    scale = sigma2 if sigma2 > 0 else float(np.mean(np.abs(obs.r) ** 2))
    if T_policy == "fixed":
        candidates = [T if T is not None else T_multiple * scale]
    elif T_policy == "grid":
        candidates = threshold_grid(scale)
    else:
        raise ValueError(f"unknown threshold policy {T_policy!r}")
    if sigma2 == 0:
        h_hat = build_shift_matrix(obs.y, L) @ _centre(2 * L + 1, L)
        params = SureLetParams(L, _centre(2 * L + 2, L), float(candidates[0]), T_policy)
        return h_hat, params, sure_risk(obs.y, h_hat, obs.K, 0.0)

    best = None
    for t in candidates:
        try:
            h_hat, a, risk = _let_solve(obs, sigma2, L, float(t), basis)
        except DegenerateObservationError:
            if len(candidates) == 1:
                raise
            continue
        if best is None or risk.epsilon < best[2].epsilon:
            best = (h_hat, SureLetParams(L, a, float(t), T_policy), risk)
    if best is None:
        raise DegenerateObservationError("no threshold on the grid gave a solvable system")
    return best


# ---------------------------------------------------------------- dispatch

ESTIMATOR_NAMES = ("ml", "lmmse", "kang", "james-stein", "sure-linear", "sure-let", "genie")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to run and with what parameters."""

    name: str
    L: int = 1
    T_policy: str = "fixed"
    T_multiple: float = DEFAULT_T_MULTIPLE

    def __post_init__(self):
        if self.name not in ESTIMATOR_NAMES:
            raise ValueError(f"unknown estimator {self.name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")
        if self.T_policy not in ("fixed", "grid"):
            raise ValueError(f"unknown threshold policy {self.T_policy!r}")

    @property
    def label(self) -> str:
        if self.name == "sure-linear":
            return f"sure-linear(N={2 * self.L + 1})"
        if self.name == "sure-let":
            tag = "grid" if self.T_policy == "grid" else f"T={self.T_multiple:g}s2"
            return f"sure-let(N={2 * self.L + 1},{tag})"
        return self.name

    @classmethod
    def parse(cls, text: str, L: int = 1, T_policy: str = "fixed") -> "EstimatorSpec":
        """``name`` or ``name:L`` (e.g. ``sure-let:2``)."""
        name, _, lval = text.strip().partition(":")
        return cls(name, int(lval) if lval else L, T_policy)


def run_estimator(spec: EstimatorSpec, obs: ObservationPair, sigma2: float, *, C_hh=None, h_true=None):
    """Return ``(h_hat, epsilon)``; ``epsilon`` is NaN for non-SURE estimators."""
    nan = float("nan")
    if spec.name == "ml":
        return estimate_ml(obs), nan
    if spec.name == "genie":
        if h_true is None:
            raise ValueError("genie estimator needs the true channel")
        return np.asarray(h_true, dtype=np.complex128).copy(), nan
    if spec.name == "lmmse":
        if C_hh is None:
            raise ValueError("lmmse estimator needs C_hh")
        if sigma2 == 0:
            return lmmse_noiseless_limit(obs, C_hh), nan
        return estimate_lmmse(obs, C_hh, sigma2), nan
    if spec.name == "kang":
        return estimate_cir_threshold(obs, sigma2), nan
    if spec.name == "james-stein":
        h_hat, risk = estimate_james_stein(obs, sigma2)
        return h_hat, risk.epsilon
    if spec.name == "sure-linear":
        h_hat, risk = estimate_sure_linear(obs, sigma2, spec.L)
        return h_hat, risk.epsilon
    h_hat, _, risk = estimate_sure_let(obs, sigma2, spec.L, spec.T_policy, T_multiple=spec.T_multiple)
    return h_hat, risk.epsilon

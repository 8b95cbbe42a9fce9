"""Maximum-likelihood two-qubit state reconstruction.

The density matrix is parameterized by 16 reals through an upper-triangular
factor T, rho = T^dag T / Tr(T^dag T), which keeps every candidate physical.
The objective is the Gaussian-approximated log-likelihood

    L(t) = -sum_k (p_k(t) - f_k)^2 / (2 p_k(t))

maximized with a Nelder-Mead simplex started from a linear-inversion guess.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DegenerateParameterError, InvalidStateError
from .readout import TomographyData, combine_counts, resample_counts

PROB_FLOOR = 1e-12
PSD_TOL = 1e-8

PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)
# PAULI2[i, j] = sigma_i (x) sigma_j
PAULI2 = np.einsum("iab,jcd->ijacbd", PAULI, PAULI).reshape(4, 4, 4, 4)

# (row, col, real index, imag index) of the off-diagonal entries of T, 0-based t
_OFFDIAG = [(0, 1, 4, 5), (1, 2, 6, 7), (2, 3, 8, 9), (0, 2, 10, 11), (1, 3, 12, 13), (0, 3, 14, 15)]


_FLAT = np.array([4 * r + c for r, c, _, _ in _OFFDIAG])
_RE = np.array([re for _, _, re, _ in _OFFDIAG])
_IM = np.array([im for _, _, _, im in _OFFDIAG])
_DIAG = np.array([0, 5, 10, 15])


def cholesky_factor(t) -> np.ndarray:
    """Upper-triangular T with t1..t4 on the diagonal and t_r - i t_{r+1} above it."""
    t = np.asarray(t, dtype=float)
    T = np.zeros(16, dtype=complex)
    T[_DIAG] = t[:4]
    T[_FLAT] = t[_RE] - 1j * t[_IM]
    return T.reshape(4, 4)


def cholesky_density(t) -> np.ndarray:
    T = cholesky_factor(t)
    M = T.conj().T @ T
    norm = np.trace(M).real
    if norm <= 0:
        raise DegenerateParameterError("all Cholesky parameters are zero")
    return M / norm


def _semidefinite_cholesky(rho: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Lower L with L L^dag = rho, also for singular PSD rho (zero pivots give zero columns)."""
    n = rho.shape[0]
    L = np.zeros_like(rho, dtype=complex)
    for j in range(n):
        d = rho[j, j].real - np.sum(np.abs(L[j, :j]) ** 2)
        if d <= tol:
            continue
        L[j, j] = math.sqrt(d)
        L[j + 1:, j] = (rho[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def density_to_params(rho: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Inverse of :func:`cholesky_density` (regularized for rank-deficient rho)."""
    rho = 0.5 * (rho + rho.conj().T) + eps * np.eye(4)
    T = _semidefinite_cholesky(rho).conj().T
    t = np.zeros(16)
    t[:4] = T[range(4), range(4)].real
    for r, c, re, im in _OFFDIAG:
        t[re] = T[r, c].real
        t[im] = -T[r, c].imag
    return t


def validate_density(rho: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidStateError(f"trace {np.trace(rho).real} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -tol:
        raise InvalidStateError(f"eigenvalue {w.min():.3e} below -{tol:g}")
    return 0.5 * (rho + rho.conj().T)


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho_th, rho) -> float:
    """Tr sqrt(sqrt(rho_th) rho sqrt(rho_th)); accepts state vectors too."""
    rho_th = _as_density(rho_th)
    rho = _as_density(rho)
    s = _sqrtm_psd(validate_density(rho_th))
    inner = s @ validate_density(rho) @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0, None))))


def trace_distance(a, b) -> float:
    w = np.linalg.eigvalsh(_as_density(a) - _as_density(b))
    return float(0.5 * np.sum(np.abs(w)))


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        state = state / np.linalg.norm(state)
        return np.outer(state, state.conj())
    return state


def stokes(rho: np.ndarray) -> np.ndarray:
    """S_ij = Tr(rho sigma_i (x) sigma_j), indices ordered I, X, Y, Z."""
    return np.real(np.einsum("ijab,ba->ij", PAULI2, rho))


def from_stokes(S: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ijab->ab", S, PAULI2) / 4


def predicted_probabilities(rho: np.ndarray, projectors: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ki,ij,kj->k", projectors.conj(), rho, projectors))


def log_likelihood(t, data: TomographyData) -> float:
    return _Objective(data.projectors, data.f).terms(t)[0]


class _Objective:
    """Log-likelihood with the measurement vectors folded into a 16-column matrix."""

    def __init__(self, projectors, f):
        # p_k = sum_ij conj(P_ki) rho_ij P_kj
        self.W = np.einsum("ki,kj->kij", projectors.conj(), projectors).reshape(len(projectors), 16)
        self.f = np.asarray(f, dtype=float)

    def terms(self, t):
        T = cholesky_factor(t)
        M = T.conj().T @ T
        norm = np.trace(M).real
        if norm <= 0:
            raise DegenerateParameterError("all Cholesky parameters are zero")
        p = (self.W @ M.ravel()).real / norm
        floored = bool(np.any(p < PROB_FLOOR))
        p = np.maximum(p, PROB_FLOOR)
        return float(-np.sum((p - self.f) ** 2 / (2 * p))), floored


def linear_inversion(data: TomographyData) -> np.ndarray | None:
    """Least-squares Stokes estimate with S_00 = 1; None if under-determined."""
    P = data.projectors
    # Tr(|psi><psi| sigma_ij) / 4 for each measurement vector
    design = np.real(np.einsum("ka,ijab,kb->kij", P.conj(), PAULI2, P)).reshape(len(P), 16) / 4
    rhs = data.f - design[:, 0]
    A = design[:, 1:]
    if np.linalg.matrix_rank(A) < 15:
        return None
    s, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    S = np.concatenate([[1.0], s]).reshape(4, 4)
    return from_stokes(S)


def forced_purity_init(data: TomographyData) -> np.ndarray:
    """Physical starting point: inverted Stokes vector, eigenvalues clipped at 0."""
    rho = linear_inversion(data)
    if rho is None:
        return density_to_params(np.eye(4) / 4)
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        return density_to_params(np.eye(4) / 4)
    rho = (v * (w / w.sum())) @ v.conj().T
    return density_to_params(rho)


@dataclass
class TomographyResult:
    rho: np.ndarray
    stokes: np.ndarray
    log_likelihood: float
    f_k: np.ndarray
    fidelity: float | None = None
    fidelity_std: float | None = None
    init_log_likelihood: float = float("nan")
    floor_triggered: bool = False
    n_evaluations: int = 0
    params: np.ndarray = field(default_factory=lambda: np.zeros(16))


def mle_reconstruct(data: TomographyData, init=None, restarts: int = 5, rng: np.random.Generator | None = None,
                    target=None, fatol: float = 1e-10, maxiter: int = 20000) -> TomographyResult:
    """Maximize the log-likelihood over the Cholesky parameters.

    The first simplex starts at ``init`` (forced-purity guess by default); each
    of up to ``restarts`` further runs re-seeds a simplex around the best point
    with a random jitter, stopping early once a restart gains less than
    ``fatol``. The result is never worse than the starting point.
    """
    if len(data.f) < 16:
        raise ConvergenceError("need at least 16 measured frequencies")
    rng = rng if rng is not None else np.random.default_rng(0)
    t0 = forced_purity_init(data) if init is None else np.asarray(init, dtype=float)
    objective = _Objective(data.projectors, data.f)

    def cost(t):
        if not np.any(t):
            return np.inf
        return -objective.terms(t)[0]

    best_t, best_cost = t0.copy(), cost(t0)
    init_value = -best_cost
    evaluations, converged = 0, False
    scale = max(np.max(np.abs(t0)), 1e-3)
    for k in range(restarts + 1):
        start = best_t if k == 0 else best_t + rng.normal(0, 0.02 * scale, 16)
        res = minimize(cost, start, method="Nelder-Mead",
                       options={"fatol": fatol, "xatol": 1e-9, "maxiter": maxiter, "maxfev": 2 * maxiter,
                                "adaptive": True})
        evaluations += res.nfev
        converged |= bool(res.success)
        gain = best_cost - res.fun
        if gain > 0:
            best_t, best_cost = res.x, res.fun
        # a restart that no longer improves means the simplex has settled
        if k > 0 and converged and gain < fatol:
            break
    rho = cholesky_density(best_t)
    value, floored = objective.terms(best_t)
    result = TomographyResult(rho, stokes(rho), value, data.f.copy(), init_log_likelihood=init_value,
                              floor_triggered=floored, n_evaluations=evaluations, params=best_t)
    if target is not None:
        result.fidelity = fidelity(target, rho)
    if not converged:
        raise ConvergenceError("simplex search did not converge within the restart budget", best=result)
    return result


def bootstrap_std(samples, statistic, n_resamples: int, rng: np.random.Generator) -> float:
    """Sample standard deviation of ``statistic`` over resamples with replacement."""
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    samples = np.asarray(samples)
    n = len(samples)
    values = [statistic(samples[rng.integers(0, n, n)]) for _ in range(n_resamples)]
    return float(np.std(values, ddof=1))


def bootstrap_fidelity(data: TomographyData, target, n_resamples: int = 100, rng: np.random.Generator | None = None,
                       restarts: int = 0) -> tuple[float, np.ndarray]:
    """Std of the reconstructed fidelity over per-setting shot resamples.

    Returns the standard deviation and the individual resampled fidelities.
    """
    if data.counts is None:
        raise ValueError("bootstrap needs shot tallies (run with finite shots)")
    if n_resamples < 100:
        raise ValueError("n_resamples must be at least 100")
    rng = rng if rng is not None else np.random.default_rng(0)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(int(rng.integers(2 ** 63))).spawn(n_resamples)]
    n_pairs = len(data.settings) // 2
    fids = np.empty(n_resamples)
    for k, sub in enumerate(streams):
        counts = resample_counts(data.counts, sub)
        resampled = TomographyData(combine_counts(counts, n_pairs), data.projectors, data.settings, counts, data.shots)
        try:
            res = mle_reconstruct(resampled, restarts=restarts, rng=sub)
        except ConvergenceError as exc:
            res = exc.best
        fids[k] = fidelity(target, res.rho)
    return float(np.std(fids, ddof=1)), fids


def random_density(rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed random two-qubit state of the given rank."""
    rank = rank or 4
    G = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


PAULI_LABELS = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]

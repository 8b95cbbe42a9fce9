"""Avoided-crossing spectroscopy fit between a fixed qubit and a tunable transmon.

Branches follow

    w_pm(flux) = (w_T + w_q)/2 +- sqrt(((w_T - w_q)/2)^2 + J^2),
    w_T(flux) = w_max sqrt(|cos(pi * scale * flux)|)

with all frequencies in Hz and J the half splitting (J/2pi). The minimum gap
is 2J, reported in the J/pi convention as ``2 J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, InvalidInputError

J_STARTS = (1e6, 10e6, 100e6)
MIN_POINTS = 6


@dataclass(frozen=True)
class CrossingDataset:
    """Spectroscopy points; ``branch`` is +1 (upper), -1 (lower) or 0 (unknown)."""

    flux: np.ndarray
    freq: np.ndarray
    branch: np.ndarray
    qubit: str = "A"

    def __post_init__(self):
        flux = np.asarray(self.flux, dtype=float)
        freq = np.asarray(self.freq, dtype=float)
        branch = np.zeros(len(flux), dtype=int) if self.branch is None else np.asarray(self.branch, dtype=int)
        if not (flux.shape == freq.shape == branch.shape) or flux.ndim != 1:
            raise InvalidInputError("flux, freq and branch must be 1-d arrays of equal length")
        if not np.all(np.isin(branch, (-1, 0, 1))):
            raise InvalidInputError("branch labels must be -1, 0 or +1")
        if self.qubit not in ("A", "B", "C"):
            raise InvalidInputError(f"unknown qubit {self.qubit!r}")
        object.__setattr__(self, "flux", flux)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "branch", branch)

    def __len__(self):
        return len(self.flux)


@dataclass(frozen=True)
class CrossingFit:
    J: float
    omega_q: float
    omega_max: float
    scale: float
    residual_rms: float
    n_points: int

    @property
    def j_over_pi(self) -> float:
        return 2 * self.J

    @property
    def degeneracy_flux(self) -> float:
        """Smallest positive flux where the bare transmon meets the qubit."""
        ratio = (self.omega_q / self.omega_max) ** 2
        if ratio > 1:
            return float("nan")
        return math.acos(ratio) / (math.pi * self.scale)

    def branches(self, flux) -> tuple[np.ndarray, np.ndarray]:
        return crossing_branches(flux, self.J, self.omega_q, self.omega_max, self.scale)


def transmon_frequency(flux, omega_max: float, scale: float):
    return omega_max * np.sqrt(np.abs(np.cos(np.pi * scale * np.asarray(flux, dtype=float))))


def crossing_branches(flux, J: float, omega_q: float, omega_max: float, scale: float):
    """(upper, lower) branch frequencies."""
    wt = transmon_frequency(flux, omega_max, scale)
    mean = 0.5 * (wt + omega_q)
    half = np.sqrt((0.5 * (wt - omega_q)) ** 2 + J ** 2)
    return mean + half, mean - half


def synthetic_dataset(J: float, omega_q: float, omega_max: float, scale: float, flux,
                      noise: float = 0.0, rng: np.random.Generator | None = None,
                      labeled: bool = True, qubit: str = "A") -> CrossingDataset:
    """Both branches at every flux point, optionally with Gaussian frequency noise."""
    flux = np.asarray(flux, dtype=float)
    up, down = crossing_branches(flux, J, omega_q, omega_max, scale)
    freq = np.concatenate([up, down])
    if noise:
        rng = rng if rng is not None else np.random.default_rng()
        freq = freq + rng.normal(0, noise, freq.shape)
    branch = np.concatenate([np.ones(len(flux), int), -np.ones(len(flux), int)])
    return CrossingDataset(np.concatenate([flux, flux]), freq, branch if labeled else np.zeros_like(branch), qubit)


def infer_branches(data: CrossingDataset) -> np.ndarray:
    """Fill unknown labels: where a flux has two points, the higher is the upper branch."""
    branch = data.branch.copy()
    for value in np.unique(data.flux):
        idx = np.flatnonzero((data.flux == value) & (branch == 0))
        if len(idx) == 2 and np.all(data.branch[data.flux == value] == 0):
            hi, lo = idx[np.argsort(data.freq[idx])[::-1]]
            branch[hi], branch[lo] = 1, -1
    return branch


def _residuals(params, flux, freq, branch):
    J, wq, wmax, scale = params
    up, down = crossing_branches(flux, abs(J), wq, wmax, scale)
    nearest = np.where(np.abs(freq - up) < np.abs(freq - down), up, down)
    model = np.where(branch > 0, up, np.where(branch < 0, down, nearest))
    return model - freq


def _initial_guess(flux, freq, branch):
    """Moment-based start from flux points that carry both branches."""
    pairs = []
    for value in np.unique(flux):
        up = freq[(flux == value) & (branch > 0)]
        dn = freq[(flux == value) & (branch < 0)]
        if len(up) and len(dn):
            pairs.append((value, up.mean(), dn.mean()))
    if len(pairs) >= 3:
        f, up, dn = map(np.array, zip(*pairs))
        s, d2 = up + dn, (up - dn) ** 2
        # d^2 - s^2 = -4 s w_q + 4 (w_q^2 + J^2)
        A = np.column_stack([-4 * s, np.ones_like(s)])
        (wq, c), *_ = np.linalg.lstsq(A, d2 - s ** 2, rcond=None)
        J = math.sqrt(max(c / 4 - wq ** 2, 0.0))
        wt, ft = s - wq, f
    else:
        wq, J = float(np.median(freq)), 0.0
        wt, ft = freq, flux
    best = None
    span = max(np.max(np.abs(ft)), 1e-9)
    for scale in np.linspace(0.05, 0.98, 94) / span:
        basis = np.sqrt(np.abs(np.cos(np.pi * scale * ft)))
        wmax = float(basis @ wt / (basis @ basis))
        err = float(np.sum((wmax * basis - wt) ** 2))
        if best is None or err < best[0]:
            best = (err, wmax, scale)
    return np.array([J, wq, best[1], best[2]])


def fit_avoided_crossing(data: CrossingDataset, j_starts=J_STARTS) -> CrossingFit:
    """Damped least-squares fit with several starting couplings; best cost wins."""
    if len(data) < MIN_POINTS:
        raise FitError(f"need at least {MIN_POINTS} points, got {len(data)}")
    branch = infer_branches(data)
    if not (np.any(branch > 0) and np.any(branch < 0)):
        raise FitError("points cover a single branch; the coupling is underdetermined")
    guess = _initial_guess(data.flux, data.freq, branch)
    args = (data.flux, data.freq, branch)
    freq_scale = float(np.max(np.abs(data.freq)))
    x_scale = np.array([1e6, freq_scale * 1e-3, freq_scale * 1e-3, 1e-3 * max(abs(guess[3]), 1e-6)])
    best = None
    for j0 in j_starts:
        start = guess.copy()
        start[0] = j0
        try:
            res = least_squares(_residuals, start, args=args, method="lm", x_scale=x_scale,
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
        except ValueError:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None or not np.all(np.isfinite(best.x)):
        raise FitError("least-squares fit failed")
    rms = float(np.sqrt(np.mean(best.fun ** 2)))
    if best.status <= 0:
        raise FitError(f"least-squares fit did not converge: {best.message}", residual_rms=rms)
    J, wq, wmax, scale = best.x
    return CrossingFit(abs(J), wq, wmax, abs(scale), rms, len(data))

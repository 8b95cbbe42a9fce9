"""Synthetic joint dispersive readout of qubits A and B.

A single-shot voltage is drawn from a Gaussian centred on

    mu_s = beta0 + beta1 z_A + beta2 z_B + beta12 z_A z_B

for basis state s (z = +1 for |0>). Only the outer states are resolvable:
V > vth_plus is recorded as 00, V < vth_minus as 11 and anything in between
(including the thresholds themselves) is discarded. A second variant of each
tomography setting flips qubit B before classification so that |01> and |10>
populations are read through the 00 and 11 windows.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import gates
from .errors import InsufficientStatisticsError, InvalidInputError

STATES = ("00", "01", "10", "11")
OUT_00, OUT_11, DISCARD = 0, 1, 2
OUTCOME_LABELS = ("00", "11", "discard")
PROB_TOL = 1e-9

PRE_ROTATIONS = {
    "I": np.eye(2, dtype=complex),
    "X90": gates.rotation(-math.pi / 2, math.pi / 2),   # R_x(pi/2)
    "Ym90": gates.rotation(0.0, -math.pi / 2),          # R_y(-pi/2)
}
FLIP_B = gates.single_qubit_operator("B", gates.X)


@dataclass(frozen=True)
class MeasurementModel:
    beta0: float = 0.0
    beta1: float = 1.7
    beta2: float = 1.3
    beta12: float = 0.0
    sigma: float = 1.0
    vth_plus: float = 1.5
    vth_minus: float = -1.5
    herald: bool = True
    p_therm: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInputError(f"sigma must be positive, got {self.sigma}")
        if not 0 <= self.p_therm < 1:
            raise InvalidInputError(f"p_therm must lie in [0, 1), got {self.p_therm}")
        m00, m01, m10, m11 = self.mu
        if not (m00 > self.vth_plus > max(m01, m10) and min(m01, m10) > self.vth_minus > m11):
            raise InvalidInputError(
                "means and thresholds must satisfy mu00 > vth+ > mu01, mu10 > vth- > mu11")

    @property
    def mu(self) -> np.ndarray:
        """Mean voltages ordered 00, 01, 10, 11."""
        z = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])
        return self.beta0 + self.beta1 * z[:, 0] + self.beta2 * z[:, 1] + self.beta12 * z[:, 0] * z[:, 1]

    @classmethod
    def separated(cls, scale: float = 20.0, **kw) -> "MeasurementModel":
        """Default ordering with the means pushed far apart relative to sigma."""
        base = cls()
        return cls(base.beta0, base.beta1 * scale, base.beta2 * scale, base.beta12, base.sigma,
                   base.vth_plus * scale, base.vth_minus * scale, **kw)

    def window_probabilities(self) -> np.ndarray:
        """P(outcome | state): rows 00, 01, 10, 11; columns 00, 11, discard."""
        up = norm.sf(self.vth_plus, loc=self.mu, scale=self.sigma)
        down = norm.cdf(self.vth_minus, loc=self.mu, scale=self.sigma)
        return np.column_stack([up, down, 1 - up - down])


def classify(v, model: MeasurementModel):
    """Outcome code(s) for voltage(s) ``v``: OUT_00, OUT_11 or DISCARD."""
    v = np.asarray(v, dtype=float)
    out = np.full(v.shape, DISCARD, dtype=np.int8)
    out[v > model.vth_plus] = OUT_00
    out[v < model.vth_minus] = OUT_11
    return out if out.ndim else int(out)


def classify_label(v: float, model: MeasurementModel) -> str:
    return OUTCOME_LABELS[classify(v, model)]


@dataclass
class ShotRecords:
    """Columnar shot records: setting index, raw voltage and outcome code."""

    setting: np.ndarray
    voltage: np.ndarray
    outcome: np.ndarray

    def __len__(self):
        return len(self.voltage)

    @classmethod
    def concat(cls, parts: list["ShotRecords"]) -> "ShotRecords":
        if not parts:
            return cls(np.zeros(0, int), np.zeros(0), np.zeros(0, np.int8))
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in ("setting", "voltage", "outcome")))

    def counts(self, setting: int | None = None) -> np.ndarray:
        sel = self.outcome if setting is None else self.outcome[self.setting == setting]
        return np.bincount(sel, minlength=3)[:3]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["setting_k", "v_p", "outcome"])
        for k, v, o in zip(self.setting, self.voltage, self.outcome):
            writer.writerow([int(k), f"{v:.9g}", OUTCOME_LABELS[o]])
        return buf.getvalue()


def _check_probabilities(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,) or np.any(p < -PROB_TOL) or abs(p.sum() - 1) > PROB_TOL:
        raise InvalidInputError(f"need four non-negative probabilities summing to 1, got {probs}")
    p = np.clip(p, 0, None)
    return p / p.sum()


def sample_shots(probs, model: MeasurementModel, n_shots: int, rng: np.random.Generator,
                 setting: int = 0) -> ShotRecords:
    """Draw basis states, then Gaussian voltages, then classify."""
    p = _check_probabilities(probs)
    states = rng.choice(4, size=n_shots, p=p)
    v = rng.normal(model.mu[states], model.sigma)
    return ShotRecords(np.full(n_shots, setting), v, classify(v, model))


def histogram_csv(records: ShotRecords, bins: int = 100, value_range=None) -> str:
    counts, edges = np.histogram(records.voltage, bins=bins, range=value_range)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["bin_low", "bin_high", "count"])
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        writer.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])
    return buf.getvalue()


# --- tomography settings -------------------------------------------------------


@dataclass(frozen=True)
class TomographySetting:
    pre_A: str
    pre_B: str
    cnot_pair: bool = False

    @property
    def rotation(self) -> np.ndarray:
        return np.kron(PRE_ROTATIONS[self.pre_A], PRE_ROTATIONS[self.pre_B])

    @property
    def unitary(self) -> np.ndarray:
        """Everything applied between state preparation and readout."""
        return FLIP_B @ self.rotation if self.cnot_pair else self.rotation


def tomography_settings() -> list[TomographySetting]:
    """The 9 pre-rotation pairs, first without and then with the population-exchange pair."""
    pairs = list(itertools.product(PRE_ROTATIONS, repeat=2))
    return [TomographySetting(a, b, flag) for flag in (False, True) for a, b in pairs]


def apply_cnot_pair(populations) -> np.ndarray:
    """Populations (00, 01, 10, 11) after exchanging 01<->00 and 10<->11."""
    p = np.asarray(populations, dtype=float)
    return p[[1, 0, 3, 2]]


# --- running the protocol --------------------------------------------------------


@dataclass
class TomographyData:
    """Observed frequencies ``f`` for measurement vectors ``projectors`` (rows).

    Entries come in groups of four per pre-rotation pair (00, 01, 10, 11 in
    the rotated basis) and each group sums to one. ``counts`` holds the raw
    (00, 11, discard) tallies of every setting, in ``settings`` order.
    """

    f: np.ndarray
    projectors: np.ndarray
    settings: list
    counts: np.ndarray | None = None
    shots: int | None = None
    records: ShotRecords | None = None
    heralded_fraction: float = 1.0
    pair_labels: list = field(default_factory=list)


def projectors_for(settings: list[TomographySetting]) -> tuple[np.ndarray, list]:
    """Measurement vectors R^dag|s> for each plain pre-rotation pair."""
    rows, labels = [], []
    for s in settings:
        if s.cnot_pair:
            continue
        R = s.rotation
        for k, name in enumerate(STATES):
            rows.append(R.conj().T[:, k])
            labels.append((s.pre_A, s.pre_B, name))
    return np.array(rows), labels


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        state = state / np.linalg.norm(state)
        return np.outer(state, state.conj())
    return state


def thermal_state(p: float) -> np.ndarray:
    single = np.diag([1 - p, p]).astype(complex)
    return np.kron(single, single)


def combine_counts(counts: np.ndarray, n_pairs: int) -> np.ndarray:
    """Per-pair frequencies (00, 01, 10, 11) from plain and exchanged tallies.

    ``counts`` rows are settings: the first ``n_pairs`` plain, the next
    ``n_pairs`` with the exchange pair. Plain windows give 00 and 11, the
    exchanged windows give 01 (via 00) and 10 (via 11).
    """
    f = np.empty(4 * n_pairs)
    for j in range(n_pairs):
        plain, swapped = counts[j], counts[n_pairs + j]
        group = np.array([plain[OUT_00], swapped[OUT_00], swapped[OUT_11], plain[OUT_11]], dtype=float)
        total = group.sum()
        if total <= 0:
            raise InsufficientStatisticsError(f"every shot of pre-rotation pair {j} was discarded")
        f[4 * j:4 * j + 4] = group / total
    return f


def run_tomography(state=None, model: MeasurementModel | None = None, shots: int | None = 10_000,
                   rng: np.random.Generator | None = None, preparation: np.ndarray | None = None,
                   keep_records: bool = True) -> TomographyData:
    """Simulate the 18-setting protocol and return observed frequencies.

    Pass either a two-qubit ``state`` (vector or density matrix) or a 4x4
    ``preparation`` unitary applied to the initial state; without heralding
    that initial state is thermal with excited population ``p_therm`` per
    qubit, with heralding it is |00> and only ``(1 - p_therm)^3`` of the
    attempts survive. ``shots`` of 0 or None gives exact Born frequencies.
    """
    model = model or MeasurementModel()
    settings = tomography_settings()
    n_pairs = len(settings) // 2
    projectors, labels = projectors_for(settings)
    if state is None and preparation is None:
        raise InvalidInputError("need a state or a preparation unitary")
    if state is not None:
        rho = _as_density(state)
    else:
        rho0 = np.diag([1, 0, 0, 0]).astype(complex) if model.herald else thermal_state(model.p_therm)
        rho = preparation @ rho0 @ preparation.conj().T

    if not shots:
        f = np.real(np.einsum("ki,ij,kj->k", projectors.conj(), rho, projectors))
        f = np.clip(f, 0, None)
        for j in range(n_pairs):
            f[4 * j:4 * j + 4] /= f[4 * j:4 * j + 4].sum()
        return TomographyData(f, projectors, settings, pair_labels=labels)

    rng = rng if rng is not None else np.random.default_rng()
    survive = (1 - model.p_therm) ** 3 if model.herald else 1.0
    parts, counts, kept_total, attempted = [], np.zeros((len(settings), 3), dtype=int), 0, 0
    for k, s in enumerate(settings):
        n = shots
        if model.herald and model.p_therm > 0:
            n = int(rng.binomial(shots, survive))
        attempted += shots
        kept_total += n
        U = s.unitary
        probs = np.clip(np.real(np.diag(U @ rho @ U.conj().T)), 0, None)
        rec = sample_shots(probs / probs.sum(), model, n, rng, setting=k)
        counts[k] = rec.counts()
        if keep_records:
            parts.append(rec)
    f = combine_counts(counts, n_pairs)
    return TomographyData(f, projectors, settings, counts, shots,
                          ShotRecords.concat(parts) if keep_records else None,
                          kept_total / attempted, labels)


def resample_counts(counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-setting resampling of shots with replacement, done on the tallies."""
    out = np.empty_like(counts)
    for k, row in enumerate(counts):
        n = row.sum()
        out[k] = rng.multinomial(n, row / n) if n else row
    return out

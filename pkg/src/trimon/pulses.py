"""Time-domain simulation of multi-tone drives on the three-qubit ZZ model.

Each qubit is simulated in a frame rotating at the mean of its two C-ground
band frequencies, so the static Hamiltonian is the diagonal residual of the
spin model (band offsets of +-J). A tone of frequency ``freq`` and phase
``phase`` on qubit q contributes

    (Omega(t)/2) (exp(-i psi) |0><1| + h.c.),  psi = phase + pi/2 - 2 pi (freq - f_frame) t

with t measured from the start of the sequence. Propagators are reported in
the interaction picture of the static residual; there a resonant pulse of
area theta/2pi implements exactly the rotation ``gates.rotation(phase, theta)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf

from . import gates
from .circuit import ZZModel, spin_hamiltonian, transition_bands
from .errors import CalibrationError, InvalidInputError, StepSizeError

DEFAULT_DT = 10e-12
DEFAULT_SIGMA = 10e-9
RAMP_SIGMAS = 4.5
# edges must decay to 1e-4 of peak: exp(-r^2/2) = 1e-4
MIN_RAMP_SIGMAS = math.sqrt(2 * math.log(1e4))
BIT = {"A": 4, "B": 2, "C": 1}
C_GROUND = [0, 2, 4, 6]
CHUNK = 16384

# pulse lengths of the demonstrated circuits, keyed by (target, band, |theta|)
DEMO_DURATIONS = {
    ("A", "lower", round(math.pi, 9)): 241e-9,
    ("B", "lower", round(math.pi, 9)): 497e-9,
    ("B", "upper", round(math.pi / 2, 9)): 281e-9,
    ("B", "both", round(math.pi / 2, 9)): 281e-9,
    ("A", "both", round(math.pi / 4, 9)): 108e-9,
    ("A", "upper", round(math.pi / 2, 9)): 152e-9,
}
FALLBACK_DURATIONS = {"A": 241e-9, "B": 497e-9}


@dataclass(frozen=True)
class PulseShape:
    """Gaussian-edge flat-top envelope with a carrier.

    ``amp`` is the peak Rabi rate Omega/2pi (Hz); times in seconds.
    """

    amp: float
    rise_sigma: float
    flat: float
    total: float
    phase: float = 0.0
    freq: float = 0.0

    def __post_init__(self):
        if self.total < self.flat or self.flat < 0 or self.rise_sigma < 0:
            raise InvalidInputError("need 0 <= flat <= total and rise_sigma >= 0")
        if self.rise_sigma > 0 and self.ramp < MIN_RAMP_SIGMAS * self.rise_sigma * (1 - 1e-12):
            raise InvalidInputError(
                f"ramp {self.ramp:.3e} s shorter than {MIN_RAMP_SIGMAS:.3f} sigma; edges not below 1e-4 of peak")

    @property
    def ramp(self) -> float:
        return 0.5 * (self.total - self.flat)

    @classmethod
    def flat_top(cls, total: float, amp: float = 0.0, rise_sigma: float = DEFAULT_SIGMA,
                 phase: float = 0.0, freq: float = 0.0, ramp_sigmas: float = RAMP_SIGMAS) -> "PulseShape":
        """Shape of given total length with ramps of ``ramp_sigmas`` widths each."""
        flat = total - 2 * ramp_sigmas * rise_sigma
        if flat < 0:
            raise InvalidInputError(f"total {total:.3e} s too short for {ramp_sigmas} sigma ramps")
        return cls(amp, rise_sigma, flat, total, phase, freq)


@dataclass(frozen=True)
class DriveTone:
    target: str
    shape: PulseShape
    start: float = 0.0
    band: str | None = None

    def __post_init__(self):
        if self.target not in BIT:
            raise InvalidInputError(f"unknown qubit {self.target!r}")

    @property
    def stop(self) -> float:
        return self.start + self.shape.total


@dataclass
class PropagatorResult:
    """``U`` is the interaction-picture propagator, ``U_rot`` the rotating-frame one."""

    U: np.ndarray
    U_rot: np.ndarray
    grid: float
    duration: float
    fidelity_to_ideal: float | None = None
    tones: list = field(default_factory=list)
    ledger: gates.FrameLedger | None = None

    def evolve(self, psi: np.ndarray) -> np.ndarray:
        return self.U @ psi


def envelope(shape: PulseShape, t):
    """Envelope value (Hz) at time(s) ``t`` measured from the pulse start."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t >= 0) & (t <= shape.total)
    tr = shape.ramp
    tc = np.clip(t, tr, shape.total - tr)
    if shape.rise_sigma > 0:
        val = shape.amp * np.exp(-((t - tc) ** 2) / (2 * shape.rise_sigma ** 2))
    else:
        val = np.where(t == tc, shape.amp, 0.0)
    out[inside] = val[inside]
    return out if out.ndim else float(out)


def envelope_area(shape: PulseShape) -> float:
    """Integral of the envelope (Hz s); the rotation angle is 2 pi times this."""
    s = shape.rise_sigma
    if s == 0:
        return shape.amp * shape.flat
    return shape.amp * shape.flat + math.sqrt(2 * math.pi) * s * shape.amp * erf(shape.ramp / (math.sqrt(2) * s))


def frame_frequencies(zz: ZZModel) -> dict[str, float]:
    """Mean band frequency of each qubit with C grounded (C at its A, B ground value)."""
    table = transition_bands(zz)
    return {
        "A": 0.5 * (table.upper["A"] + table.lower["A"]),
        "B": 0.5 * (table.upper["B"] + table.lower["B"]),
        "C": table.entries["C"][(0, 0)],
    }


def static_residual(zz: ZZModel) -> np.ndarray:
    """Diagonal of the rotating-frame static Hamiltonian (Hz) over |ABC>."""
    energies = np.diag(spin_hamiltonian(zz))
    frames = frame_frequencies(zz)
    counts = np.array([[b >> 2 & 1, b >> 1 & 1, b & 1] for b in range(8)])
    return energies - counts @ np.array([frames["A"], frames["B"], frames["C"]])


def band_frequency(zz: ZZModel, target: str, band: str) -> float:
    return transition_bands(zz).band(target, band)


def _expm_2x2_batch(a, d, b):
    """exp(-i [[a, b], [conj b, d]]) for arrays of real a, d and complex b."""
    m0 = 0.5 * (a + d)
    vz = 0.5 * (a - d)
    norm = np.sqrt(vz ** 2 + np.abs(b) ** 2)
    cos = np.cos(norm)
    sinc = np.sinc(norm / np.pi)  # sin(norm)/norm
    ph = np.exp(-1j * m0)
    u00 = ph * (cos - 1j * sinc * vz)
    u11 = ph * (cos + 1j * sinc * vz)
    u01 = ph * (-1j * sinc * b)
    u10 = ph * (-1j * sinc * np.conj(b))
    return u00, u01, u10, u11


def _pairs(q: str):
    bit = BIT[q]
    return [(i, i | bit) for i in range(8) if not i & bit]


def _tree_product(steps: np.ndarray) -> np.ndarray:
    """steps[-1] @ ... @ steps[0] by pairwise reduction."""
    while len(steps) > 1:
        if len(steps) % 2:
            steps = np.concatenate([steps, np.eye(steps.shape[-1], dtype=steps.dtype)[None]], axis=0)
        steps = steps[1::2] @ steps[0::2]
    return steps[0]


def _step_unitaries(h0w, coeffs, dt, n):
    """Step propagators for one chunk.

    ``h0w`` is the angular static diagonal, ``coeffs[q]`` the angular |0><1|
    drive coefficient of qubit q per step (or None when undriven).
    """
    driven = {q: c for q, c in coeffs.items() if c is not None}
    U = np.zeros((n, 8, 8), dtype=complex)
    active = np.zeros((len(driven), n), dtype=bool)
    for k, c in enumerate(driven.values()):
        active[k] = c != 0
    n_active = active.sum(axis=0) if len(driven) else np.zeros(n, dtype=int)

    idle = n_active == 0
    if idle.any():
        U[idle] = np.diag(np.exp(-1j * h0w * dt))[None]
    for k, (q, c) in enumerate(driven.items()):
        sel = active[k] & (n_active == 1)
        if not sel.any():
            continue
        cs = c[sel] * dt
        for i0, i1 in _pairs(q):
            u00, u01, u10, u11 = _expm_2x2_batch(h0w[i0] * dt, h0w[i1] * dt, cs)
            U[sel, i0, i0] = u00
            U[sel, i0, i1] = u01
            U[sel, i1, i0] = u10
            U[sel, i1, i1] = u11
    multi = n_active > 1
    if multi.any():
        H = np.zeros((int(multi.sum()), 8, 8), dtype=complex)
        H[:, range(8), range(8)] = h0w
        for q, c in driven.items():
            cm = c[multi]
            for i0, i1 in _pairs(q):
                H[:, i0, i1] += cm
                H[:, i1, i0] += np.conj(cm)
        w, v = np.linalg.eigh(H)
        U[multi] = (v * np.exp(-1j * w * dt)[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
    return U


def average_gate_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """(Tr(M M^dag) + |Tr M|^2) / (d (d + 1)) with M = V^dag U."""
    d = V.shape[0]
    M = V.conj().T @ U
    return float((np.trace(M @ M.conj().T).real + abs(np.trace(M)) ** 2) / (d * (d + 1)))


def _ideal_fidelity(U8: np.ndarray, ideal: np.ndarray) -> float:
    ideal = np.asarray(ideal)
    if ideal.shape == (8, 8):
        ideal = gates.restrict(ideal)
    return average_gate_fidelity(gates.restrict(U8), ideal)


def propagate(tones: list[DriveTone], zz: ZZModel | None = None, dt: float = DEFAULT_DT,
              ideal: np.ndarray | None = None, duration: float | None = None) -> PropagatorResult:
    """Integrate the driven spin model with midpoint piecewise-constant steps."""
    zz = zz or ZZModel.measured()
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    span = max([t.stop for t in tones], default=0.0)
    if duration is not None:
        span = max(span, duration)
    h0 = static_residual(zz)
    frames = frame_frequencies(zz)

    fastest = float(np.max(np.abs(h0)))
    for tone in tones:
        fastest = max(fastest, abs(tone.shape.freq - frames[tone.target]) + abs(tone.shape.amp))
    if fastest > 0 and dt > 1.0 / (20.0 * fastest):
        raise StepSizeError(f"dt = {dt:.3e} s does not resolve {fastest:.3e} Hz (need dt <= 1/(20 f))")

    n_steps = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
    h0w = 2 * np.pi * h0
    U_rot = np.eye(8, dtype=complex)
    if n_steps:
        step = span / n_steps
        targets = sorted({t.target for t in tones})
        for lo in range(0, n_steps, CHUNK):
            hi = min(n_steps, lo + CHUNK)
            tm = (np.arange(lo, hi) + 0.5) * step
            coeffs = {}
            for q in targets:
                c = np.zeros(hi - lo, dtype=complex)
                for tone in tones:
                    if tone.target != q or tone.shape.amp == 0:
                        continue
                    env = envelope(tone.shape, tm - tone.start)
                    psi = tone.shape.phase + np.pi / 2 - 2 * np.pi * (tone.shape.freq - frames[q]) * tm
                    c += np.pi * env * np.exp(-1j * psi)  # 2 pi * Omega / 2
                coeffs[q] = c if np.any(c) else None
            U_rot = _tree_product(_step_unitaries(h0w, coeffs, step, hi - lo)) @ U_rot
    else:
        step = dt
    drift = float(np.max(np.abs(U_rot.conj().T @ U_rot - np.eye(8))))
    if drift > 1e-6:
        raise StepSizeError(f"unitarity drift {drift:.2e} exceeds 1e-6")
    U = np.diag(np.exp(1j * h0w * span)) @ U_rot
    fid = _ideal_fidelity(U, ideal) if ideal is not None else None
    return PropagatorResult(U, U_rot, step, span, fid, list(tones))


# --- calibration and circuit lowering -----------------------------------------


def gate_tones(shape: PulseShape, target: str, band: str, zz: ZZModel, start: float = 0.0) -> list[DriveTone]:
    """Tones for one band (or two tones for ``"both"``) sharing ``shape``."""
    bands = ("upper", "lower") if band == "both" else (band,)
    return [DriveTone(target, replace(shape, freq=band_frequency(zz, target, b)), start, b) for b in bands]


def _block(U8: np.ndarray, target: str, band: str) -> np.ndarray:
    sub = gates.restrict(U8)
    key = (target, "upper" if band == "both" else band)
    i0, i1 = gates._SUBSPACE[key]
    return sub[np.ix_([i0, i1], [i0, i1])]


def rotation_angle(block: np.ndarray) -> float:
    """Rotation angle in [0, 2 pi] of a 2x2 block close to an SU(2) rotation."""
    a, b = block[0, 0], block[1, 0]
    return 2 * math.atan2(abs(b), math.copysign(abs(a), a.real))


def calibrate(template: PulseShape, theta: float, zz: ZZModel | None = None, target: str = "A",
              band: str = "lower", dt: float = DEFAULT_DT, amp_max: float = 100e6,
              tol: float = 1e-4) -> PulseShape:
    """Amplitude such that the simulated rotation on the resonant block equals ``theta``.

    Negative angles are realized by adding pi to the phase.
    """
    zz = zz or ZZModel.measured()
    if theta == 0:
        return replace(template, amp=0.0)
    shape = replace(template, phase=template.phase + math.pi) if theta < 0 else template
    goal = abs(theta)
    if goal > 2 * math.pi:
        raise CalibrationError(f"|theta| = {goal} exceeds 2 pi")

    def angle(amp):
        tones = gate_tones(replace(shape, amp=amp), target, band, zz)
        return rotation_angle(_block(propagate(tones, zz, dt).U, target, band))

    unit = envelope_area(replace(shape, amp=1.0))
    if unit <= 0:
        raise CalibrationError("pulse has zero area")
    guess = goal / (2 * math.pi * unit)
    lo, hi = 0.9 * guess, 1.1 * guess
    f_lo, f_hi = angle(lo) - goal, angle(hi) - goal
    for _ in range(20):
        if f_lo <= 0 <= f_hi or hi > amp_max:
            break
        if f_lo > 0:
            hi, f_hi = lo, f_lo
            lo *= 0.8
            f_lo = angle(lo) - goal
        else:
            lo, f_lo = hi, f_hi
            hi *= 1.25
            f_hi = angle(min(hi, amp_max)) - goal
    hi = min(hi, amp_max)
    if not f_lo <= 0 <= f_hi:
        raise CalibrationError(f"rotation {theta:.4f} rad not reachable below amp {amp_max:.3e} Hz")
    amp = brentq(lambda a: angle(a) - goal, lo, hi, xtol=1e-12 * guess, rtol=1e-12)
    err = abs(angle(amp) - goal)
    if err > tol:
        raise CalibrationError(f"calibrated angle misses target by {err:.2e} rad")
    return replace(shape, amp=amp)


def gate_duration(spec: gates.GateSpec, durations: dict | None = None) -> float:
    key = (spec.target, spec.band, round(abs(spec.theta), 9))
    table = durations if durations is not None else DEMO_DURATIONS
    if key in table:
        return table[key]
    return FALLBACK_DURATIONS[spec.target]


def simulate_circuit(seq: gates.GateSequence, zz: ZZModel | None = None, dt: float = DEFAULT_DT,
                     ledger: gates.FrameLedger = gates.FrameLedger(), durations: dict | None = None,
                     rise_sigma: float = DEFAULT_SIGMA) -> PropagatorResult:
    """Lower a logical sequence onto calibrated back-to-back pulses and simulate it.

    The returned ``U`` includes the final virtual-Z frame, so it is directly
    comparable with ``gates.ideal_circuit(seq)`` (``fidelity_to_ideal``).
    """
    zz = zz or ZZModel.measured()
    physical, final = gates.lower_sequence(seq, ledger)
    cache: dict = {}
    tones: list[DriveTone] = []
    t = 0.0
    for spec in physical.gates:
        total = gate_duration(spec, durations)
        key = (spec.target, spec.band, abs(spec.theta), total)
        if key not in cache:
            template = PulseShape.flat_top(total, rise_sigma=rise_sigma)
            cache[key] = calibrate(template, abs(spec.theta), zz, spec.target, spec.band, dt).amp
        shape = PulseShape.flat_top(total, amp=cache[key], rise_sigma=rise_sigma,
                                    phase=spec.phi + (math.pi if spec.theta < 0 else 0.0))
        tones.extend(gate_tones(shape, spec.target, spec.band, zz, start=t))
        t += total
    result = propagate(tones, zz, dt, duration=t)
    frame_in = gates.embed(ledger.operator())
    frame_out = gates.embed(final.operator())
    result.U = frame_out @ result.U @ frame_in.conj().T
    result.fidelity_to_ideal = _ideal_fidelity(result.U, gates.ideal_circuit(seq))
    result.ledger = final
    return result


# --- schedule I/O --------------------------------------------------------------


def schedule_to_json(tones: list[DriveTone]) -> list[dict]:
    return [{
        "qubit": tone.target,
        "band": tone.band if tone.band is not None else "both",
        "amp_mhz": tone.shape.amp / 1e6,
        "rise_ns": tone.shape.rise_sigma * 1e9,
        "flat_ns": tone.shape.flat * 1e9,
        "total_ns": tone.shape.total * 1e9,
        "phase_deg": math.degrees(tone.shape.phase),
        "start_ns": tone.start * 1e9,
    } for tone in tones]


def schedule_from_json(items, zz: ZZModel | None = None) -> list[DriveTone]:
    zz = zz or ZZModel.measured()
    if isinstance(items, str):
        items = json.loads(items)
    tones = []
    for k, item in enumerate(items):
        try:
            shape = PulseShape(item["amp_mhz"] * 1e6, item["rise_ns"] * 1e-9, item["flat_ns"] * 1e-9,
                               item["total_ns"] * 1e-9, math.radians(item.get("phase_deg", 0.0)))
            tones.extend(gate_tones(shape, item["qubit"], item.get("band", "both"), zz, item.get("start_ns", 0) * 1e-9))
        except KeyError as exc:
            raise InvalidInputError(f"schedule entry {k} is missing field {exc.args[0]!r}") from None
    return tones


def envelope_csv(tones: list[DriveTone], dt: float = 1e-9) -> str:
    """Envelope samples of every tone on a common time grid, one column per tone."""
    span = max([t.stop for t in tones], default=0.0)
    times = np.arange(0.0, span + 0.5 * dt, dt)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["time_ns"] + [f"{t.target}_{t.band or 'tone'}_{k}_hz" for k, t in enumerate(tones)])
    cols = [envelope(t.shape, times - t.start) for t in tones]
    for k, time in enumerate(times):
        writer.writerow([f"{time * 1e9:.6g}"] + [f"{c[k]:.9g}" for c in cols])
    return buf.getvalue()

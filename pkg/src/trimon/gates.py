"""Matrix-level conditional rotations and virtual-Z frame bookkeeping.

Two-qubit matrices act on |AB> ordered |00>, |01>, |10>, |11> (index 2a + b).
Qubit C is left in its ground state; :func:`embed` lifts a 4x4 matrix onto the
8x8 |ABC> space.

A conditional rotation R_{Xb}(phi, theta) rotates qubit X by theta about the
axis (cos phi, sin phi, 0) only when its partner is in ground (band "upper")
or excited (band "lower"); band "both" is the unconditional rotation built
from the two.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError

TARGETS = ("A", "B")
BANDS = ("upper", "lower", "both")

# indices of the 2-d subspace rotated by each band: (target-0, target-1)
_SUBSPACE = {
    ("B", "upper"): (0, 1),
    ("B", "lower"): (2, 3),
    ("A", "upper"): (0, 2),
    ("A", "lower"): (1, 3),
}

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def rotation(phi: float, theta: float) -> np.ndarray:
    """Single-qubit rotation [[c, -e^{-i phi} s], [e^{i phi} s, c]] with c, s of theta/2."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -np.exp(-1j * phi) * s], [np.exp(1j * phi) * s, c]], dtype=complex)


def rz(zeta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * zeta), np.exp(0.5j * zeta)])


def frame_operator(zeta_A: float, zeta_B: float) -> np.ndarray:
    return np.kron(rz(zeta_A), rz(zeta_B))


@dataclass(frozen=True)
class GateSpec:
    target: str
    band: str
    phi: float
    theta: float

    def __post_init__(self):
        if self.target not in TARGETS:
            raise InvalidInputError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.band not in BANDS:
            raise InvalidInputError(f"band must be one of {BANDS}, got {self.band!r}")
        if not -2 * math.pi - 1e-12 <= self.theta <= 2 * math.pi + 1e-12:
            raise InvalidInputError(f"theta must lie in [-2pi, 2pi], got {self.theta}")

    @property
    def partner(self) -> str:
        return "B" if self.target == "A" else "A"

    @property
    def is_native_cnot(self) -> bool:
        return self.band != "both" and math.isclose(abs(self.theta), math.pi, abs_tol=1e-12)


@dataclass(frozen=True)
class FrameLedger:
    zeta_A: float = 0.0
    zeta_B: float = 0.0

    def zeta(self, q: str) -> float:
        return getattr(self, f"zeta_{q}")

    def shifted(self, q: str, delta: float) -> "FrameLedger":
        return replace(self, **{f"zeta_{q}": self.zeta(q) + delta})

    def operator(self) -> np.ndarray:
        return frame_operator(self.zeta_A, self.zeta_B)


@dataclass(frozen=True)
class GateSequence:
    """Gates in application order; ``snapshots[k]`` is the ledger seen by gate k."""

    gates: tuple = ()
    snapshots: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    def __add__(self, other: "GateSequence") -> "GateSequence":
        return GateSequence(self.gates + other.gates)

    def __len__(self):
        return len(self.gates)


def conditional_rotation(spec: GateSpec) -> np.ndarray:
    """4x4 matrix of a single-band (or, for band "both", unconditional) rotation."""
    if spec.band == "both":
        return unconditional_rotation(spec.target, spec.phi, spec.theta)
    U = np.eye(4, dtype=complex)
    i0, i1 = _SUBSPACE[(spec.target, spec.band)]
    U[np.ix_([i0, i1], [i0, i1])] = rotation(spec.phi, spec.theta)
    return U


def unconditional_rotation(target: str, phi: float, theta: float) -> np.ndarray:
    lower = conditional_rotation(GateSpec(target, "lower", phi, theta))
    upper = conditional_rotation(GateSpec(target, "upper", phi, theta))
    return lower @ upper


def single_qubit_operator(target: str, op: np.ndarray) -> np.ndarray:
    return np.kron(op, I2) if target == "A" else np.kron(I2, op)


def controlled(control: str, control_state: int, block: np.ndarray) -> np.ndarray:
    """Apply ``block`` to the other qubit when ``control`` is in ``control_state``."""
    proj = np.zeros((2, 2), dtype=complex)
    proj[control_state, control_state] = 1
    rest = np.eye(2) - proj
    if control == "A":
        return np.kron(proj, block) + np.kron(rest, I2)
    return np.kron(block, proj) + np.kron(I2, rest)


def cnot(control: str) -> np.ndarray:
    """Textbook CNOT with the given control (CNOT_BA has control B, target A)."""
    return controlled(control, 1, X)


SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def ledger_update(spec: GateSpec) -> float:
    """Virtual-Z increment of the control qubit after a native theta = +-pi rotation.

    The single-band pi rotation equals, up to global phase, the controlled
    Pauli i sign(theta) R(phi, theta) followed by Rz(-+pi/2) on the control;
    adding this increment to the ledger cancels that Z.
    """
    if not spec.is_native_cnot:
        return 0.0
    sign = math.copysign(1.0, spec.theta)
    return sign * math.pi / 2 if spec.band == "lower" else -sign * math.pi / 2


def ideal_unitary(spec: GateSpec) -> np.ndarray:
    """Logical gate a frame-corrected pulse implements."""
    if not spec.is_native_cnot:
        return conditional_rotation(spec)
    block = 1j * math.copysign(1.0, spec.theta) * rotation(spec.phi, spec.theta)
    return controlled(spec.partner, 1 if spec.band == "lower" else 0, block)


def lower_sequence(seq: GateSequence, ledger: FrameLedger = FrameLedger()) -> tuple[GateSequence, FrameLedger]:
    """Rewrite logical gates into physical ones with ledger-shifted phases.

    Returns the physical sequence (whose snapshots record the ledger in force
    before each gate) and the final ledger.
    """
    physical, snapshots = [], []
    for gate in seq.gates:
        snapshots.append(ledger)
        physical.append(replace(gate, phi=gate.phi - ledger.zeta(gate.target)))
        delta = ledger_update(gate)
        if delta:
            ledger = ledger.shifted(gate.partner, delta)
    return GateSequence(physical, snapshots), ledger


def physical_unitary(seq: GateSequence) -> np.ndarray:
    U = np.eye(4, dtype=complex)
    for gate in seq.gates:
        U = conditional_rotation(gate) @ U
    return U


def apply_with_frame(seq: GateSequence, ledger: FrameLedger = FrameLedger()) -> tuple[np.ndarray, FrameLedger]:
    """Composite logical unitary of ``seq`` and the ledger after it.

    The physical pulses are generated from ledger-shifted phases, and the
    accumulated virtual Z is folded back in, so the returned matrix equals
    :func:`ideal_circuit` up to a global phase.
    """
    physical, final = lower_sequence(seq, ledger)
    U = final.operator() @ physical_unitary(physical) @ ledger.operator().conj().T
    return U, final


def ideal_circuit(seq: GateSequence) -> np.ndarray:
    U = np.eye(4, dtype=complex)
    for gate in seq.gates:
        U = ideal_unitary(gate) @ U
    return U


def equal_up_to_phase(U: np.ndarray, V: np.ndarray, atol: float = 1e-10) -> bool:
    k = np.unravel_index(np.argmax(np.abs(V)), V.shape)
    if abs(U[k]) < atol:
        return False
    phase = U[k] / abs(U[k]) * abs(V[k]) / V[k]
    return bool(np.allclose(U, phase * V, atol=atol, rtol=0))


def state_fidelity(psi: np.ndarray, target: np.ndarray) -> float:
    """|<target|psi>|^2 for normalized state vectors."""
    return float(abs(np.vdot(target, psi)) ** 2)


def embed(U: np.ndarray) -> np.ndarray:
    """Lift a 4x4 |AB> operator onto |ABC> with C idle."""
    return np.kron(U, I2)


def restrict(U8: np.ndarray) -> np.ndarray:
    """C-ground block (indices 0, 2, 4, 6) of an 8x8 |ABC> operator."""
    idx = [0, 2, 4, 6]
    return U8[np.ix_(idx, idx)]


# --- canonical circuits --------------------------------------------------------


def cnot_spec(control: str) -> GateSpec:
    """Native CNOT: a pi rotation of the other qubit at its lower band, phi = -pi/2."""
    target = "A" if control == "B" else "B"
    return GateSpec(target, "lower", -math.pi / 2, math.pi)


CNOT_BA = cnot_spec("B")
CNOT_AB = cnot_spec("A")


def bell_sequence() -> GateSequence:
    """pi/2 on B (A ground) then CNOT_BA: |00> -> (|00> + |11>)/sqrt(2)."""
    return GateSequence([GateSpec("B", "upper", 0.0, math.pi / 2), CNOT_BA])


def swap_sequence() -> GateSequence:
    return GateSequence([CNOT_BA, CNOT_AB, CNOT_BA])


def transfer_sequence() -> GateSequence:
    """Moves the state of A onto B when B starts in |0>."""
    return GateSequence([CNOT_AB, CNOT_BA])


def swap_preparation() -> GateSequence:
    """|00> -> (cos(pi/8)|0> + i sin(pi/8)|1>)_A (x) |+>_B."""
    return GateSequence([
        GateSpec("B", "upper", 0.0, math.pi / 2),
        GateSpec("A", "both", math.pi / 2, math.pi / 4),
    ])


def transfer_preparation() -> GateSequence:
    """|00> -> |+>_A (x) |0>_B."""
    return GateSequence([GateSpec("A", "upper", 0.0, math.pi / 2)])


def basis_state(label: str) -> np.ndarray:
    psi = np.zeros(2 ** len(label), dtype=complex)
    psi[int(label, 2)] = 1
    return psi


def bell_state() -> np.ndarray:
    return (basis_state("00") + basis_state("11")) / math.sqrt(2)


# --- JSON circuit descriptions -----------------------------------------------


def parse_circuit(items) -> GateSequence:
    """Build a sequence from a list of dicts (or a JSON string of one).

    Each entry has ``op`` in {crot, rot, cnot, swap, transfer}; rotations take
    ``target``, ``phi_deg``, ``theta_deg`` and (crot only) ``band``; cnot takes
    ``control`` or ``target``.
    """
    if isinstance(items, str):
        items = json.loads(items)
    gates = []
    for k, item in enumerate(items):
        op = item.get("op")
        try:
            if op == "crot":
                gates.append(GateSpec(item["target"], item["band"], math.radians(item.get("phi_deg", 0.0)),
                                      math.radians(item["theta_deg"])))
            elif op == "rot":
                gates.append(GateSpec(item["target"], "both", math.radians(item.get("phi_deg", 0.0)),
                                      math.radians(item["theta_deg"])))
            elif op == "cnot":
                if "control" in item:
                    control = item["control"]
                else:
                    control = "B" if item["target"] == "A" else "A"
                if control not in TARGETS:
                    raise InvalidInputError(f"control must be one of {TARGETS}")
                gates.append(cnot_spec(control))
            elif op == "swap":
                gates.extend(swap_sequence().gates)
            elif op == "transfer":
                gates.extend(transfer_sequence().gates)
            else:
                raise InvalidInputError(f"unknown op {op!r}")
        except KeyError as exc:
            raise InvalidInputError(f"circuit entry {k} is missing field {exc.args[0]!r}") from None
    return GateSequence(gates)


def circuit_to_json(seq: GateSequence) -> list[dict]:
    out = []
    for g in seq.gates:
        entry = {"op": "rot" if g.band == "both" else "crot", "target": g.target,
                 "phi_deg": math.degrees(g.phi), "theta_deg": math.degrees(g.theta)}
        if g.band != "both":
            entry["band"] = g.band
        out.append(entry)
    return out

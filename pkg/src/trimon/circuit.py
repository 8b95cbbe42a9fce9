"""Static device parameters of the trimon circuit.

Energies are stored as linear frequencies (E/h, in Hz) throughout; couplings
are likewise stored as J/2pi in Hz. Conventional "J/pi" numbers are produced
only by the reporting helpers (:func:`j_over_pi`).

The three modes are labelled A (dipole coupled to the cavity), B (orthogonal
dipole) and C (quadrupole). Computational basis states are ordered |ABC> with
A the most significant bit.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.special import eval_genlaguerre, gammaln

from .errors import InvalidInputError, ResonanceError, TruncationWarning

E_CHARGE = constants.e
PLANCK = constants.h
HBAR = constants.hbar

QUBITS = ("A", "B", "C")
# partner order per qubit, cyclic
PARTNERS = {"A": ("B", "C"), "B": ("C", "A"), "C": ("A", "B")}


def _pair_key(i: str, j: str) -> str:
    key = {frozenset("AB"): "AB", frozenset("BC"): "BC", frozenset("CA"): "CA"}
    return key[frozenset((i, j))]


@dataclass(frozen=True)
class DeviceSpec:
    """Circuit inputs.

    Parameters
    ----------
    EJ:
        Josephson energy of each of the four junctions, E_J/h in Hz.
    C_A, C_B:
        Diagonal shunt capacitances (F).
    C_Cp:
        Adjacent-node capacitance including the junction capacitance (F).
    flux:
        Loop flux in units of the flux quantum.
    """

    EJ: float
    C_A: float
    C_B: float
    C_Cp: float
    flux: float = 0.0

    def __post_init__(self):
        if not self.EJ > 0:
            raise InvalidInputError(f"EJ must be positive, got {self.EJ}")
        for name in ("C_A", "C_B", "C_Cp"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class ChargingEnergies:
    E_CA: float
    E_CB: float
    E_CC: float

    def __post_init__(self):
        for name in ("E_CA", "E_CB", "E_CC"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.E_CA, self.E_CB, self.E_CC])


@dataclass(frozen=True)
class ModeParams:
    """Uncoupled mode frequencies (omega/2pi, Hz) and impedances (Ohm)."""

    omega_A: float
    omega_B: float
    omega_C: float
    Z_A: float
    Z_B: float
    Z_C: float

    def omega(self, q: str) -> float:
        return getattr(self, f"omega_{q}")


@dataclass(frozen=True)
class KerrCouplings:
    """Self- and cross-Kerr coefficients, composite shifts and anharmonicities (Hz)."""

    J_A: float
    J_B: float
    J_C: float
    J_AB: float
    J_BC: float
    J_CA: float
    beta_A: float
    beta_B: float
    beta_C: float
    alpha_A: float
    alpha_B: float
    alpha_C: float

    def self_kerr(self, q: str) -> float:
        return getattr(self, f"J_{q}")

    def cross(self, i: str, j: str) -> float:
        return getattr(self, f"J_{_pair_key(i, j)}")

    def beta(self, q: str) -> float:
        return getattr(self, f"beta_{q}")

    def alpha(self, q: str) -> float:
        return getattr(self, f"alpha_{q}")


@dataclass(frozen=True)
class CavityParams:
    """Readout cavity and its coupling to qubit A (all Hz)."""

    omega_bare: float
    g: float
    kappa: float
    Delta0: float
    Delta1: float
    g_B: float = 0.0
    g_C: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidInputError(f"kappa must be positive, got {self.kappa}")

    @classmethod
    def build(cls, omega_bare: float, g: float, kappa: float, omega_A_upper: float,
              alpha_A: float, g_B: float = 0.0, g_C: float = 0.0) -> "CavityParams":
        delta0 = omega_A_upper - omega_bare
        return cls(omega_bare, g, kappa, delta0, delta0 + alpha_A, g_B, g_C)


@dataclass(frozen=True)
class DispersiveShifts:
    chi_A: float
    chi_B: float
    chi_C: float


@dataclass(frozen=True)
class ZZModel:
    """Qubit-level (two levels per mode) longitudinal-coupling model.

    ``eps_i`` is the sigma_z coefficient omega_i - 2 beta_i of qubit i. Build
    from circuit-derived parameters with :meth:`from_derived` or from measured
    band frequencies with :meth:`from_upper_bands`.
    """

    eps_A: float
    eps_B: float
    eps_C: float
    J_AB: float
    J_BC: float
    J_CA: float

    def eps(self, q: str) -> float:
        return getattr(self, f"eps_{q}")

    def cross(self, i: str, j: str) -> float:
        return getattr(self, f"J_{_pair_key(i, j)}")

    @classmethod
    def from_derived(cls, modes: ModeParams, kerr: KerrCouplings) -> "ZZModel":
        return cls(
            modes.omega_A - 2 * kerr.beta_A,
            modes.omega_B - 2 * kerr.beta_B,
            modes.omega_C - 2 * kerr.beta_C,
            kerr.J_AB, kerr.J_BC, kerr.J_CA,
        )

    @classmethod
    def from_upper_bands(cls, wu_A: float, wu_B: float, wu_C: float,
                         J_AB: float, J_BC: float, J_CA: float) -> "ZZModel":
        """Invert the all-partners-ground frequencies omega_i^{00} = eps_i + J_ij + J_ik."""
        return cls(wu_A - J_AB - J_CA, wu_B - J_AB - J_BC, wu_C - J_CA - J_BC, J_AB, J_BC, J_CA)

    @classmethod
    def measured(cls) -> "ZZModel":
        """Reference device as characterized by spectroscopy: measured upper bands and couplings."""
        return cls.from_upper_bands(
            5.5585e9, 6.1470e9, 7.0180e9,
            from_j_over_pi(201.2e6), from_j_over_pi(253.0e6), from_j_over_pi(232.0e6),
        )


@dataclass(frozen=True)
class TransitionTable:
    """Conditional transition frequencies of each qubit (Hz).

    ``entries[q][(s, t)]`` is the frequency of qubit ``q`` with its partners
    ``PARTNERS[q]`` in states ``s`` and ``t``.
    """

    entries: dict
    upper: dict = field(default_factory=dict)
    lower: dict = field(default_factory=dict)

    def conditional(self, q: str, **partners: int) -> float:
        p1, p2 = PARTNERS[q]
        return self.entries[q][(partners.get(p1, 0), partners.get(p2, 0))]

    def band(self, q: str, band: str) -> float:
        if band == "upper":
            return self.upper[q]
        if band == "lower":
            return self.lower[q]
        raise InvalidInputError(f"unknown band {band!r}")


@dataclass(frozen=True)
class DerivedParams:
    spec: DeviceSpec
    charging: ChargingEnergies
    modes: ModeParams
    kerr: KerrCouplings
    zz: ZZModel
    bands: TransitionTable
    cavity: CavityParams | None = None
    chi: DispersiveShifts | None = None


def j_over_pi(J: float) -> float:
    """Report a stored J/2pi (Hz) as the J/pi convention."""
    return 2.0 * J


def from_j_over_pi(value: float) -> float:
    return value / 2.0


# --- closed-form derivations -------------------------------------------------


def derive_charging_energies(spec: DeviceSpec) -> ChargingEnergies:
    e2 = E_CHARGE ** 2
    return ChargingEnergies(
        e2 / (2 * (spec.C_Cp + spec.C_A)) / PLANCK,
        e2 / (2 * (spec.C_Cp + spec.C_B)) / PLANCK,
        e2 / (8 * spec.C_Cp) / PLANCK,
    )


def capacitances_from_charging(ec: ChargingEnergies) -> tuple[float, float, float]:
    """Inverse of :func:`derive_charging_energies`; returns (C_A, C_B, C_Cp)."""
    e2 = E_CHARGE ** 2
    c_cp = e2 / (8 * ec.E_CC * PLANCK)
    c_a = e2 / (2 * ec.E_CA * PLANCK) - c_cp
    c_b = e2 / (2 * ec.E_CB * PLANCK) - c_cp
    if c_a <= 0 or c_b <= 0:
        raise InvalidInputError("charging energies imply non-positive shunt capacitance")
    return c_a, c_b, c_cp


def charging_from_anharmonicities(alpha_A: float, alpha_B: float, alpha_C: float) -> ChargingEnergies:
    """Invert alpha_A = -E_CA/4, alpha_B = -E_CB/4, alpha_C = -E_CC (all Hz, negative)."""
    return ChargingEnergies(-4.0 * alpha_A, -4.0 * alpha_B, -alpha_C)


def derive_mode_params(EJ: float, ec: ChargingEnergies) -> ModeParams:
    if not EJ > 0:
        raise InvalidInputError(f"EJ must be positive, got {EJ}")
    # hbar/e^2 * sqrt(E_C / x E_J) is unit-free in the energy ratio, so Hz works directly
    r_q = HBAR / E_CHARGE ** 2
    return ModeParams(
        omega_A=math.sqrt(8 * EJ * ec.E_CA),
        omega_B=math.sqrt(8 * EJ * ec.E_CB),
        omega_C=math.sqrt(32 * EJ * ec.E_CC),
        Z_A=r_q * math.sqrt(ec.E_CA / (2 * EJ)),
        Z_B=r_q * math.sqrt(ec.E_CB / (2 * EJ)),
        Z_C=r_q * math.sqrt(ec.E_CC / (8 * EJ)),
    )


def derive_kerr_couplings(ec: ChargingEnergies) -> KerrCouplings:
    a, b, c = ec.E_CA, ec.E_CB, ec.E_CC
    J_A, J_B, J_C = a / 8, b / 8, c / 2
    J_AB = math.sqrt(a * b) / 4
    J_BC = math.sqrt(b * c) / 2
    J_CA = math.sqrt(c * a) / 2
    return KerrCouplings(
        J_A, J_B, J_C, J_AB, J_BC, J_CA,
        beta_A=J_A + J_AB + J_CA,
        beta_B=J_B + J_AB + J_BC,
        beta_C=J_C + J_BC + J_CA,
        alpha_A=-a / 4,
        alpha_B=-b / 4,
        alpha_C=-c,
    )


def perturbative_energy(n_A: int, n_B: int, n_C: int, modes: ModeParams, kerr: KerrCouplings) -> float:
    """Level energy (Hz) of the Kerr-oscillator model relative to the vacuum."""
    n = {"A": n_A, "B": n_B, "C": n_C}
    if min(n.values()) < 0:
        raise InvalidInputError(f"occupations must be non-negative, got {n}")
    energy = 0.0
    for q in QUBITS:
        energy += (modes.omega(q) - kerr.beta(q)) * n[q] - kerr.self_kerr(q) * n[q] ** 2
    for i, j in (("A", "B"), ("B", "C"), ("C", "A")):
        energy -= 2 * kerr.cross(i, j) * n[i] * n[j]
    return energy


def _require_zero_flux(spec: DeviceSpec | None):
    if spec is not None and spec.flux != 0:
        raise InvalidInputError("closed-form spectrum requires zero loop flux")


def transition_bands(zz: ZZModel) -> TransitionTable:
    entries = {}
    for q in QUBITS:
        p1, p2 = PARTNERS[q]
        entries[q] = {
            (s, t): zz.eps(q) + (-1) ** s * zz.cross(q, p1) + (-1) ** t * zz.cross(q, p2)
            for s in (0, 1) for t in (0, 1)
        }
    # C grounded: A conditions on B (first partner), B conditions on A (second partner)
    upper = {"A": entries["A"][(0, 0)], "B": entries["B"][(0, 0)]}
    lower = {"A": entries["A"][(1, 0)], "B": entries["B"][(0, 1)]}
    return TransitionTable(entries, upper, lower)


def basis_states() -> list[tuple[int, int, int]]:
    return list(itertools.product((0, 1), repeat=3))


def spin_hamiltonian(zz: ZZModel, chi: DispersiveShifts | None = None, n_photons: float = 0.0) -> np.ndarray:
    """Diagonal 8x8 ZZ Hamiltonian (Hz) over |ABC>, ground state at zero.

    With ``chi`` and ``n_photons`` the state-dependent cavity pull
    -sum_i chi_i sigma_z^i n is added.
    """
    diag = np.empty(8)
    for k, bits in enumerate(basis_states()):
        z = {q: 1 - 2 * b for q, b in zip(QUBITS, bits)}
        e = sum(zz.eps(q) * z[q] for q in QUBITS)
        e += sum(zz.cross(i, j) * z[i] * z[j] for i, j in (("A", "B"), ("B", "C"), ("C", "A")))
        e = -0.5 * e
        if chi is not None:
            e -= n_photons * (chi.chi_A * z["A"] + chi.chi_B * z["B"] + chi.chi_C * z["C"])
        diag[k] = e
    return np.diag(diag - diag[0])


def dispersive_shifts(cav: CavityParams, couplings) -> DispersiveShifts:
    """Dispersive shifts (Hz) of the three qubits.

    ``couplings`` is anything exposing ``J_AB`` and ``J_CA`` (KerrCouplings or
    ZZModel), in Hz.
    """
    d0, d1 = cav.Delta0, cav.Delta1
    d_b = d0 + 2 * couplings.J_AB
    d_c = d0 + 2 * couplings.J_CA
    for name, value in (("Delta0", d0), ("Delta1", d1), ("Delta0+2J_AB", d_b), ("Delta0+2J_CA", d_c)):
        if value == 0:
            raise ResonanceError(name, value)
    g2 = cav.g ** 2
    return DispersiveShifts(
        chi_A=g2 * (1 / d0 - 1 / d1),
        chi_B=0.5 * g2 * (1 / d0 - 1 / d_b),
        chi_C=0.5 * g2 * (1 / d0 - 1 / d_c),
    )


def coupling_from_chi_A(chi_A: float, Delta0: float, alpha_A: float) -> float:
    """Qubit-cavity coupling g that reproduces a measured chi_A."""
    d1 = Delta0 + alpha_A
    if Delta0 == 0:
        raise ResonanceError("Delta0", Delta0)
    if d1 == 0:
        raise ResonanceError("Delta1", d1)
    ratio = chi_A / (1 / Delta0 - 1 / d1)
    if ratio < 0:
        raise InvalidInputError("chi_A sign is inconsistent with the detunings")
    return math.sqrt(ratio)


def derive(spec: DeviceSpec, omega_bare: float | None = None, g: float | None = None,
           kappa: float | None = None, g_B: float = 0.0, g_C: float = 0.0) -> DerivedParams:
    """All closed-form parameters of a zero-flux device, optionally with its cavity."""
    _require_zero_flux(spec)
    ec = derive_charging_energies(spec)
    modes = derive_mode_params(spec.EJ, ec)
    kerr = derive_kerr_couplings(ec)
    zz = ZZModel.from_derived(modes, kerr)
    bands = transition_bands(zz)
    cavity = chi = None
    if omega_bare is not None and g is not None:
        cavity = CavityParams.build(omega_bare, g, kappa if kappa is not None else 1.0,
                                    bands.upper["A"], kerr.alpha_A, g_B, g_C)
        chi = dispersive_shifts(cavity, kerr)
    return DerivedParams(spec, ec, modes, kerr, zz, bands, cavity, chi)


def canonical_device() -> DeviceSpec:
    """E_J/h = 8.7 GHz with charging energies inverted from the measured anharmonicities."""
    ec = charging_from_anharmonicities(-111.0e6, -116.0e6, -138.6e6)
    c_a, c_b, c_cp = capacitances_from_charging(ec)
    return DeviceSpec(EJ=8.7e9, C_A=c_a, C_B=c_b, C_Cp=c_cp)


# --- exact diagonalization of the circuit Hamiltonian -------------------------

POTENTIALS = ("cosine", "quartic", "harmonic")


def displacement_elements(lam: float, n: int) -> np.ndarray:
    """Matrix of exp(i lam (a + a^dag)) on the first ``n`` Fock states.

    Closed form via generalized Laguerre polynomials, so the truncated block
    is exact (no error from truncating the operator before exponentiating).
    """
    x = lam * lam
    out = np.empty((n, n), dtype=complex)
    for m in range(n):
        for k in range(m + 1):
            d = m - k
            logpref = 0.5 * (gammaln(k + 1) - gammaln(m + 1)) - x / 2
            val = np.exp(logpref) * (1j * lam) ** d * eval_genlaguerre(k, d, x)
            out[m, k] = val
            out[k, m] = val
    return out


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def _padded_powers(n: int, pad: int = 6) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a+a^dag)^2, (a+a^dag)^4 and -(a^dag-a)^2 computed before truncation."""
    a = _ladder(n + pad)
    x = a + a.T
    p = a.T - a
    x2 = x @ x
    return x2[:n, :n], (x2 @ x2)[:n, :n], -(p @ p)[:n, :n]


def zero_point_phases(EJ: float, ec: ChargingEnergies) -> np.ndarray:
    """phi_zpf of modes A, B, C such that phi_i = phi_zpf (a + a^dag)."""
    return np.array([
        (2 * ec.E_CA / EJ) ** 0.25,
        (2 * ec.E_CB / EJ) ** 0.25,
        (ec.E_CC / (2 * EJ)) ** 0.25,
    ])


def circuit_hamiltonian(spec: DeviceSpec, n_max: int = 6, potential: str = "quartic") -> np.ndarray:
    """Three-mode circuit Hamiltonian (Hz) in the harmonic-oscillator product basis.

    ``potential`` selects the Josephson term: the full trigonometric ring
    energy at the device flux (``"cosine"``), its fourth-order zero-flux
    expansion (``"quartic"``), or only the quadratic part (``"harmonic"``).
    """
    if potential not in POTENTIALS:
        raise InvalidInputError(f"potential must be one of {POTENTIALS}, got {potential!r}")
    if n_max < 3:
        raise InvalidInputError(f"n_max must be >= 3, got {n_max}")
    if potential != "cosine":
        _require_zero_flux(spec)
    ec = derive_charging_energies(spec)
    EJ = spec.EJ
    z = zero_point_phases(EJ, ec)
    x2, x4, q2 = _padded_powers(n_max)
    eye = np.eye(n_max)

    def on(i, op):
        mats = [op if k == i else eye for k in range(3)]
        return np.kron(np.kron(mats[0], mats[1]), mats[2])

    ecs = ec.as_array()
    # q_zpf = 1/phi_zpf since [phi, q] = 2i
    H = sum(ecs[i] * on(i, q2) / z[i] ** 2 for i in range(3)).astype(complex)

    if potential == "cosine":
        half = np.pi * spec.flux / 2
        dA = displacement_elements(z[0] / 2, n_max)
        dB = displacement_elements(z[1] / 2, n_max)
        dC = displacement_elements(z[2], n_max)
        cosines = np.kron(np.kron(dA.real, dB.real), dC.real)
        H = H - 4 * EJ * math.cos(half) * cosines
        if math.sin(half) != 0:
            sines = np.kron(np.kron(dA.imag, dB.imag), dC.imag)
            H = H - 4 * EJ * math.sin(half) * sines
    else:
        pA2, pB2, pC2 = (on(i, x2) * z[i] ** 2 for i in range(3))
        H = H + EJ / 2 * pA2 + EJ / 2 * pB2 + 2 * EJ * pC2
        if potential == "quartic":
            H = H - EJ / 96 * on(0, x4) * z[0] ** 4 - EJ / 96 * on(1, x4) * z[1] ** 4
            H = H - EJ / 6 * on(2, x4) * z[2] ** 4
            H = H - EJ / 16 * (pA2 @ pB2 + 4 * pB2 @ pC2 + 4 * pC2 @ pA2)
    return 0.5 * (H + H.conj().T)


def _diagonalize(spec, n_max, potential):
    w, v = np.linalg.eigh(circuit_hamiltonian(spec, n_max, potential))
    return w - w[0], v


def truncation_leakage(spec: DeviceSpec, n_max: int, potential: str = "quartic") -> float:
    """Ground-state population outside the n_max^3 space in a larger basis.

    The basis grows by two levels per mode: at zero flux the ground state only
    mixes Fock states of equal parity, so a single extra level can be empty.
    """
    n = n_max + 2
    _, v = _diagonalize(spec, n, potential)
    ground = np.abs(v[:, 0].reshape(n, n, n)) ** 2
    return float(1.0 - ground[:n_max, :n_max, :n_max].sum())


def exact_spectrum(spec: DeviceSpec, n_max: int = 6, potential: str = "quartic",
                   check_convergence: bool = True) -> np.ndarray:
    """Sorted eigenvalues (Hz) of :func:`circuit_hamiltonian`, ground state at zero."""
    if check_convergence:
        leak = truncation_leakage(spec, n_max, potential)
        if leak > 1e-6:
            warnings.warn(f"ground-state leakage {leak:.2e} beyond n_max={n_max}", TruncationWarning,
                          stacklevel=2)
    w, _ = _diagonalize(spec, n_max, potential)
    return w


def exact_levels(spec: DeviceSpec, n_max: int = 6, potential: str = "quartic",
                 n_levels: int = 30) -> dict[tuple[int, int, int], float]:
    """Lowest eigenvalues keyed by the Fock label of their dominant component."""
    w, v = _diagonalize(spec, n_max, potential)
    labels = list(itertools.product(range(n_max), repeat=3))
    out: dict[tuple[int, int, int], float] = {}
    for k in range(min(n_levels, len(w))):
        label = labels[int(np.argmax(np.abs(v[:, k]) ** 2))]
        out.setdefault(label, float(w[k]))
    return out


def compare_with_perturbation(spec: DeviceSpec, n_max: int = 6, potential: str = "quartic") -> dict:
    """Single-excitation transitions and pairwise ZZ shifts, exact vs perturbative (Hz)."""
    derived = derive(spec)
    levels = exact_levels(spec, n_max, potential)

    def pert(n):
        return perturbative_energy(*n, derived.modes, derived.kerr)

    rows = {}
    units = {"A": (1, 0, 0), "B": (0, 1, 0), "C": (0, 0, 1)}
    for q, n in units.items():
        rows[f"omega_{q}"] = (levels[n], pert(n))
    for i, j in (("A", "B"), ("B", "C"), ("C", "A")):
        both = tuple(a + b for a, b in zip(units[i], units[j]))
        exact = levels[both] - levels[units[i]] - levels[units[j]]
        approx = pert(both) - pert(units[i]) - pert(units[j])
        rows[f"zz_{i}{j}"] = (exact, approx)
    return {k: {"exact": e, "perturbative": p, "relative_error": (e - p) / p} for k, (e, p) in rows.items()}

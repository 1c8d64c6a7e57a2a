"""Two-qubit entanglement metrics on the (HH, HV, VH, VV) polarization basis.

All spectral work (Wootters concurrence, state fidelity, partial-transpose
test) goes through one primitive: eigendecomposition of Hermitian 4x4
matrices, with matrix square roots formed spectrally after zeroing
eigenvalues within the -1e-10 physicality tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PhysicalityError
from .fock import EIGENVALUE_TOL, TWO_PHOTON_BASIS, DensityMatrix

# Single-photon polarization kets. D/F are the +/- diagonal states, L/R the
# circular ones.
POLARIZATION_KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0),
    "F": np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0),
    "L": np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0),
    "R": np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2.0),
}

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)


def singlet_ket() -> np.ndarray:
    """(|HV> - |VH>)/sqrt(2) as a length-4 vector on (HH, HV, VH, VV)."""
    return np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)


def werner_state(p: float) -> DensityMatrix:
    """Werner mixture p*|singlet><singlet| + (1-p)/4 * identity.

    Physical for p in [-1/3, 1]; entangled exactly when p > 1/3.
    """
    if not -1.0 / 3.0 <= p <= 1.0:
        raise ValueError(f"Werner weight must lie in [-1/3, 1], got {p}")
    psi = singlet_ket()
    m = p * np.outer(psi, psi.conj()) + (1.0 - p) / 4.0 * np.eye(4)
    return DensityMatrix(TWO_PHOTON_BASIS, m)


@dataclass(frozen=True)
class WernerDescriptor:
    """Scalar summary of a Werner state with weight p."""

    p: float

    def __post_init__(self):
        if not -1.0 / 3.0 <= self.p <= 1.0:
            raise ValueError(f"Werner weight must lie in [-1/3, 1], got {self.p}")

    @property
    def is_entangled(self) -> bool:
        return self.p > 1.0 / 3.0

    @property
    def tangle(self) -> float:
        return max(0.0, (3.0 * self.p - 1.0) / 2.0) ** 2

    @property
    def linear_entropy(self) -> float:
        return 1.0 - self.p**2

    @property
    def witness_value(self) -> float:
        return (1.0 - 3.0 * self.p) / 4.0


def _require_two_photon_basis(rho: DensityMatrix) -> None:
    if tuple(rho.basis) != TWO_PHOTON_BASIS:
        raise ValueError(
            f"expected basis {TWO_PHOTON_BASIS}, got {tuple(rho.basis)}"
        )


def _clipped_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with small negative eigenvalues zeroed.

    Violations beyond the physicality tolerance raise instead of being
    clipped away.
    """
    vals, vecs = np.linalg.eigh(m)
    if vals[0] < -EIGENVALUE_TOL:
        raise PhysicalityError(f"negative eigenvalue {vals[0]:.3e}")
    return np.clip(vals, 0.0, None), vecs


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    vals, vecs = _clipped_eigh(m)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def singlet_weight_extract(rho: DensityMatrix) -> float:
    """Werner weight read off the matrix elements: r22 + r33 - r11 - r44.

    Requires a normalized matrix on (HH, HV, VH, VV).
    """
    _require_two_photon_basis(rho)
    d = np.diag(rho.entries)
    if np.max(np.abs(d.imag)) > 1e-10:
        raise PhysicalityError("diagonal carries imaginary residue above 1e-10")
    return float((d[1] + d[2] - d[0] - d[3]).real)


def concurrence_tangle(rho: DensityMatrix) -> tuple[float, float]:
    """Wootters concurrence and tangle of a physical two-qubit state.

    The spin-flipped matrix is rho_tilde = (sy x sy) rho* (sy x sy); with
    lambda_i the decreasing square roots of the eigenvalues of
    rho * rho_tilde,

        C = max(0, l1 - l2 - l3 - l4),  tangle = C^2.

    Computed Hermitianly as the eigenvalues of sqrt(rho) rho_tilde sqrt(rho).
    """
    _require_two_photon_basis(rho)
    m = rho.entries
    rho_tilde = _SPIN_FLIP @ m.conj() @ _SPIN_FLIP
    sqrt_rho = _sqrtm_psd(m)
    inner = sqrt_rho @ rho_tilde @ sqrt_rho
    vals, _ = _clipped_eigh(0.5 * (inner + inner.conj().T))
    lams = np.sqrt(vals)[::-1]
    c = max(0.0, float(lams[0] - lams[1] - lams[2] - lams[3]))
    return c, c * c


def linear_entropy(rho: DensityMatrix) -> float:
    """Mixedness measure d/(d-1) * (1 - Tr(rho^2)): (4/3)(1 - Tr rho^2) here.

    0 on pure states, 1 on the maximally mixed state.
    """
    purity = float(np.trace(rho.entries @ rho.entries).real)
    d = rho.dim
    return d / (d - 1.0) * (1.0 - purity)


def tangle_from_entropy_werner(s: float) -> float:
    """Tangle of a Werner state with linear entropy s.

    (1/4) * (1 - 3*sqrt(1-s))^2 for 0 <= s <= 8/9, and 0 on [8/9, 1];
    continuous at the joint.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"linear entropy must lie in [0, 1], got {s}")
    if s >= 8.0 / 9.0:
        return 0.0
    return 0.25 * (1.0 - 3.0 * math.sqrt(1.0 - s)) ** 2


def _pair_projector(a: str, b: str) -> np.ndarray:
    ket = np.kron(POLARIZATION_KETS[a], POLARIZATION_KETS[b])
    return np.outer(ket, ket.conj())


def witness_operator() -> np.ndarray:
    """Entanglement witness for the Werner family.

    (1/2) * (|HH><HH| + |VV><VV| + |DD><DD| + |FF><FF| - |LR><LR| - |RL><RL|);
    Hermitian, with non-negative expectation on every separable state and
    expectation (1 - 3p)/4 on the Werner state of weight p.
    """
    w = (
        _pair_projector("H", "H")
        + _pair_projector("V", "V")
        + _pair_projector("D", "D")
        + _pair_projector("F", "F")
        - _pair_projector("L", "R")
        - _pair_projector("R", "L")
    ) / 2.0
    return 0.5 * (w + w.conj().T)


def witness_expectation(rho: DensityMatrix) -> float:
    """Tr[witness * rho]; negative only on entangled states."""
    _require_two_photon_basis(rho)
    return float(np.trace(witness_operator() @ rho.entries).real)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """State fidelity Tr^2 sqrt(sqrt(rho) sigma sqrt(rho)).

    Symmetric, in [0, 1], and 1 exactly at equality.
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    sqrt_rho = _sqrtm_psd(rho.entries)
    inner = sqrt_rho @ sigma.entries @ sqrt_rho
    vals, _ = _clipped_eigh(0.5 * (inner + inner.conj().T))
    f = float(np.sum(np.sqrt(vals)) ** 2)
    return min(1.0, max(0.0, f))


def is_entangled_ppt(rho: DensityMatrix) -> bool:
    """Partial-transpose test; exact for two qubits.

    True when the partial transpose over the second qubit has an eigenvalue
    below -1e-10.
    """
    _require_two_photon_basis(rho)
    m = rho.entries.reshape(2, 2, 2, 2)
    pt = m.transpose(0, 3, 2, 1).reshape(4, 4)
    vals = np.linalg.eigvalsh(pt)
    return bool(vals[0] < -EIGENVALUE_TOL)


def metrics_report(rho: DensityMatrix, reference: DensityMatrix | None = None) -> dict:
    """Scalar metrics of a normalized two-photon state, JSON-ready.

    When ``reference`` is given the report includes the fidelity against it.
    """
    c, tau = concurrence_tangle(rho)
    report = {
        "p": singlet_weight_extract(rho),
        "concurrence": c,
        "tangle": tau,
        "linear_entropy": linear_entropy(rho),
        "witness": witness_expectation(rho),
        "ppt_entangled": is_entangled_ppt(rho),
    }
    if reference is not None:
        report["fidelity_vs_theory"] = fidelity(rho, reference)
    return report

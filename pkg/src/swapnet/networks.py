"""Interferometric networks: Hadamard, phase, controlled-U, Hadamard.

The control qubit is the leftmost tensor factor. The phase gate multiplies
the |1> branch by ``exp(i*phi)`` before the controlled-U, which gives

    P0 = (1 + Re(exp(i*phi) * Tr(U rho))) / 2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .qmath import MAX_DIM, DensityOperator, DimensionError, as_matrix, eigenvalues, tensor_power

UNITARY_TOL = 1e-10

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


@dataclass(frozen=True)
class InterferenceFactor:
    value: complex
    visibility: float
    phase: float  # radians, in (-pi, pi]


@dataclass(frozen=True)
class NetworkSpec:
    """The unitary a controlled-U interferometer applies to its target."""

    unitary: np.ndarray
    description: str = ""
    target_dim: int = field(init=False)

    def __post_init__(self):
        u = as_matrix(self.unitary)
        if u.shape[0] != u.shape[1]:
            raise DimensionError(f"unitary must be square, got {u.shape}")
        err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "target_dim", u.shape[0])


def _basis_permutation(d: int, k: int, positions) -> np.ndarray:
    """Index map for the operator sending factor j of |i_1 ... i_k> to slot positions[j]."""
    digits = np.indices((d,) * k).reshape(k, -1)
    out = np.zeros(digits.shape[1], dtype=np.int64)
    new_digits = np.empty_like(digits)
    for j, p in enumerate(positions):
        new_digits[p] = digits[j]
    for row in new_digits:
        out = out * d + row
    return out


def _permutation_matrix(perm: np.ndarray) -> np.ndarray:
    """Dense matrix with a 1 at (perm[i], i): basis |i> goes to |perm[i]>."""
    n = perm.size
    m = np.zeros((n, n), dtype=np.complex128)
    m[perm, np.arange(n)] = 1.0
    return m


def _check_cap(n: int) -> None:
    if n > MAX_DIM:
        raise DimensionError(f"operator dimension {n} exceeds cap {MAX_DIM}")


def swap_operator(d: int) -> np.ndarray:
    """The d^2 x d^2 permutation sending |a>|b> to |b>|a>."""
    if d < 1:
        raise ValueError("d must be >= 1")
    _check_cap(d * d)
    return _permutation_matrix(_basis_permutation(d, 2, [1, 0]))


def _adjacent_swap(d: int, k: int, i: int) -> np.ndarray:
    positions = list(range(k))
    positions[i], positions[i + 1] = i + 1, i
    return _basis_permutation(d, k, positions)


def shift_permutation_cascade(d: int, k: int) -> np.ndarray:
    """Cyclic shift as the composition of k-1 adjacent swaps.

    Applies swap(k-2, k-1) first and swap(0, 1) last, which carries
    |phi_1 ... phi_k> to |phi_k phi_1 ... phi_{k-1}>.
    """
    perm = np.arange(d**k)
    for i in range(k - 2, -1, -1):
        perm = _adjacent_swap(d, k, i)[perm]
    return perm


def shift_permutation_direct(d: int, k: int) -> np.ndarray:
    """Cyclic shift built directly from digit rotation."""
    return _basis_permutation(d, k, [(j + 1) % k for j in range(k)])


def shift_operator(d: int, k: int) -> np.ndarray:
    """Dense d^k x d^k matrix of the cyclic shift, built from k-1 swaps.

    The cascade is cross-checked against the directly rotated permutation.
    """
    if d < 1 or k < 2:
        raise ValueError(f"need d >= 1 and k >= 2, got d={d}, k={k}")
    _check_cap(d**k)
    perm = shift_permutation_cascade(d, k)
    if not np.array_equal(perm, shift_permutation_direct(d, k)):
        raise AssertionError(f"swap cascade disagrees with cyclic shift for d={d}, k={k}")
    return _permutation_matrix(perm)


def swap_network(d: int) -> NetworkSpec:
    return NetworkSpec(swap_operator(d), description=f"controlled-SWAP, d={d}")


def shift_network(d: int, k: int) -> NetworkSpec:
    return NetworkSpec(shift_operator(d, k), description=f"controlled-shift, d={d}, k={k}")


def _check_dims(spec: NetworkSpec, rho) -> np.ndarray:
    arr = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    if arr.shape != (spec.target_dim, spec.target_dim):
        raise DimensionError(f"network acts on dimension {spec.target_dim}, state has shape {arr.shape}")
    return arr


def _wrap_phase(alpha: float) -> float:
    return math.pi if alpha <= -math.pi else alpha


def interference_factor(spec: NetworkSpec, rho) -> InterferenceFactor:
    """Tr(U rho) split into visibility and fringe shift."""
    arr = _check_dims(spec, rho)
    value = complex(np.sum(spec.unitary * arr.T))
    vis, phase = cmath.polar(value)
    if vis < 1e-15:
        phase = 0.0
    return InterferenceFactor(value, vis, _wrap_phase(phase))


def network_unitary(spec: NetworkSpec, phi: float) -> np.ndarray:
    """Joint (2d x 2d) unitary of the full interferometer, control leftmost."""
    d = spec.target_dim
    _check_cap(2 * d)
    eye = np.eye(d, dtype=np.complex128)
    h = np.kron(_HADAMARD, eye)
    phase = np.kron(np.diag([1.0, cmath.exp(1j * phi)]), eye)
    cu = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    cu[:d, :d] = eye
    cu[d:, d:] = spec.unitary
    return h @ cu @ phase @ h


def run_interferometer(spec: NetworkSpec, rho, phi: float = 0.0) -> float:
    """Probability that the control qubit reads 0, by full density-matrix simulation."""
    arr = _check_dims(spec, rho)
    d = spec.target_dim
    w = network_unitary(spec, phi)
    # Input |0><0| (x) rho occupies the top-left block only.
    w_left = w[:, :d]
    out = w_left @ arr @ w_left.conj().T
    p0 = float(np.trace(out[:d, :d]).real)
    return min(1.0, max(0.0, p0))


def analytic_p0(spec: NetworkSpec, rho, phi: float = 0.0) -> float:
    f = interference_factor(spec, rho)
    return min(1.0, max(0.0, 0.5 * (1.0 + (cmath.exp(1j * phi) * f.value).real)))


def overlap(rho_a, rho_b, via: str = "analytic") -> float:
    """Tr(rho_a rho_b), analytically or from the controlled-SWAP circuit (v = 2 P0 - 1)."""
    a = rho_a.matrix if isinstance(rho_a, DensityOperator) else as_matrix(rho_a)
    b = rho_b.matrix if isinstance(rho_b, DensityOperator) else as_matrix(rho_b)
    if a.shape != b.shape:
        raise DimensionError(f"overlap needs equal dimensions, got {a.shape} and {b.shape}")
    if via == "analytic":
        # Symmetric in (a, b) for Hermitian inputs: sum_ij a_ij b_ji.
        value = float(np.sum(a * b.T).real)
    elif via == "circuit":
        d = a.shape[0]
        value = 2.0 * run_interferometer(swap_network(d), np.kron(a, b), 0.0) - 1.0
    else:
        raise ValueError(f"unknown overlap path {via!r}")
    return min(1.0, max(0.0, value))


def purity(rho, via: str = "analytic") -> float:
    return overlap(rho, rho, via=via)


POWER_TRACE_PATHS = ("matpow", "eigen", "shift", "circuit")


def power_trace(rho, k: int, via: str = "matpow") -> float:
    """Tr(rho^k).

    ``matpow`` multiplies matrices (the production path), ``eigen`` sums
    eigenvalue powers, ``shift`` evaluates Tr(V^(k) rho^(x)k) and ``circuit``
    simulates the controlled-shift interferometer.
    """
    arr = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    if k < 1:
        raise ValueError("k must be >= 1")
    d = arr.shape[0]
    if via == "matpow":
        return float(np.trace(np.linalg.matrix_power(arr, k)).real)
    if via == "eigen":
        return float(np.sum(np.clip(eigenvalues(arr), 0.0, None) ** k))
    if k == 1:
        return float(np.trace(arr).real)
    if via == "shift":
        _check_cap(d**k)
        big = tensor_power(arr, k)
        perm = shift_permutation_cascade(d, k)
        # Tr(P M) with P|i> = |perm[i]> is sum_i M[i, perm[i]].
        return float(np.sum(big[np.arange(d**k), perm]).real)
    if via == "circuit":
        _check_cap(2 * d**k)
        return 2.0 * run_interferometer(shift_network(d, k), tensor_power(arr, k), 0.0) - 1.0
    raise ValueError(f"unknown power-trace path {via!r}")


def power_traces(rho, kmax: int | None = None, via: str = "matpow") -> np.ndarray:
    """[Tr rho, Tr rho^2, ..., Tr rho^kmax] with kmax defaulting to the dimension."""
    arr = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    kmax = arr.shape[0] if kmax is None else kmax
    return np.array([power_trace(arr, k, via=via) for k in range(1, kmax + 1)])

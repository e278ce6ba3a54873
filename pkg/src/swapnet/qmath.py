"""Dense complex linear algebra for small quantum systems.

Matrices are plain ``numpy`` complex arrays. :class:`DensityOperator` and
:class:`PureState` wrap validated, read-only arrays; every function here
accepts either the wrappers or anything ``np.asarray`` understands.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 4096
VALIDATION_TOL = 1e-10
LINALG_TOL = 1e-9
_PHASE_THRESHOLD = 1e-12


class DimensionError(ValueError):
    """Raised when operand shapes are inconsistent or exceed ``MAX_DIM``."""


@dataclass(frozen=True)
class Violation:
    invariant: str  # "hermitian", "trace" or "psd"
    magnitude: float


class InvalidDensityError(ValueError):
    """A matrix failed one or more density-operator invariants.

    ``violations`` lists every failed invariant with its numeric magnitude.
    """

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        detail = ", ".join(f"{v.invariant} violated by {v.magnitude:.3g}" for v in self.violations)
        super().__init__(f"not a density operator: {detail}")


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a 2-D complex128 array with finite entries."""
    if isinstance(m, (DensityOperator, PureState)):
        m = m.matrix if isinstance(m, DensityOperator) else m.projector()
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if max(arr.shape) > MAX_DIM:
        raise DimensionError(f"dimension {max(arr.shape)} exceeds cap {MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


class PureState:
    """A normalized state vector."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, *, normalize: bool = False):
        vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if vec.size == 0 or vec.size > MAX_DIM:
            raise DimensionError(f"invalid state dimension {vec.size}")
        norm = np.linalg.norm(vec)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / norm
        elif abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state vector has norm {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(vec))

    def __setattr__(self, name, value):
        raise AttributeError("PureState is immutable")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __repr__(self) -> str:
        return f"PureState({self.amplitudes!r})"


class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix.

    Construction validates all three invariants and raises
    :class:`InvalidDensityError` listing each violation.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, *, tol: float = VALIDATION_TOL):
        arr = as_matrix(matrix)
        violations = density_violations(arr, tol=tol)
        if violations:
            raise InvalidDensityError(violations)
        object.__setattr__(self, "matrix", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("DensityOperator is immutable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, state) -> "DensityOperator":
        if not isinstance(state, PureState):
            state = PureState(state, normalize=True)
        return cls(state.projector())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self) -> str:
        return f"DensityOperator(dim={self.dim})"


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: tuple  # of PureState, same order as eigenvalues

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((len(self.eigenvalues),) * 2, dtype=np.complex128)
        for lam, vec in zip(self.eigenvalues, self.eigenvectors):
            out += lam * vec.projector()
        return out


def density_violations(m, tol: float = VALIDATION_TOL) -> list[Violation]:
    """List the density-operator invariants that ``m`` breaks."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"density operator must be square, got shape {arr.shape}")
    out = []
    herm = float(np.max(np.abs(arr - arr.conj().T)))
    if herm > tol:
        out.append(Violation("hermitian", herm))
    tr = abs(complex(np.trace(arr)) - 1.0)
    if tr > tol:
        out.append(Violation("trace", tr))
    lam_min = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0])
    if lam_min < -tol:
        out.append(Violation("psd", -lam_min))
    return out


def validate_density(m, tol: float = VALIDATION_TOL) -> DensityOperator:
    """Return ``m`` as a :class:`DensityOperator` or raise with a full report."""
    if isinstance(m, DensityOperator):
        return m
    return DensityOperator(m, tol=tol)


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    arrays = [np.asarray(o.matrix if isinstance(o, DensityOperator) else o, dtype=np.complex128) for o in ops]
    out = reduce(np.kron, arrays)
    if max(out.shape) > MAX_DIM:
        raise DimensionError(f"tensor product dimension {max(out.shape)} exceeds cap {MAX_DIM}")
    return out


def tensor_power(m, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be >= 1")
    return tensor(*([m] * k))


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]):
    """Trace out every subsystem not listed in ``keep`` (0-based indices).

    Returns a :class:`DensityOperator` when given one, else an array.
    """
    arr = as_matrix(rho)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if arr.shape != (total, total):
        raise DimensionError(f"dims {dims} do not factor a {arr.shape[0]}x{arr.shape[1]} operator")
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep must be a nonempty subset of range({n}), got {keep}")
    if len(keep) == n:
        raise ValueError("keep must be a proper subset of the subsystems")
    gone = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    dg = int(np.prod([dims[i] for i in gone]))
    t = arr.reshape(dims + dims)
    t = t.transpose(keep + gone + [n + i for i in keep] + [n + i for i in gone])
    out = np.einsum("ijkj->ik", t.reshape(dk, dg, dk, dg))
    if isinstance(rho, DensityOperator):
        return DensityOperator(out)
    return out


def hermitian_violation(h) -> float:
    arr = np.asarray(h, dtype=np.complex128)
    return float(np.max(np.abs(arr - arr.conj().T)))


def _normalize_phase(vec: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(vec) > _PHASE_THRESHOLD)
    if idx.size:
        first = vec[idx[0]]
        vec = vec * (abs(first) / first)
    return vec


def eigh(h, tol: float = VALIDATION_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, sorted by descending eigenvalue.

    Each eigenvector has its first non-negligible amplitude made real and
    positive. Eigenvalues that tie (within ``1e-12`` relative to the matrix
    norm) are ordered by descending lexicographic order of their
    (re, im) amplitude sequence, so the standard basis comes out in index
    order for diagonal input.
    """
    arr = as_matrix(h)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"eigh needs a square matrix, got {arr.shape}")
    violation = hermitian_violation(arr)
    if violation > tol:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {violation:.3g})")
    vals, vecs = np.linalg.eigh((arr + arr.conj().T) / 2)
    vecs = [_normalize_phase(vecs[:, i]) for i in range(len(vals))]
    scale = max(1.0, float(np.max(np.abs(vals)))) if len(vals) else 1.0
    tie = 1e-12 * scale

    # Group near-equal eigenvalues, then order inside each group.
    order = sorted(range(len(vals)), key=lambda i: -vals[i])
    groups: list[list[int]] = []
    for i in order:
        if groups and abs(vals[groups[-1][0]] - vals[i]) <= tie:
            groups[-1].append(i)
        else:
            groups.append([i])
    ordered = []
    for g in groups:
        key = lambda i: tuple(x for a in vecs[i] for x in (round(a.real, 12), round(a.imag, 12)))
        ordered.extend(sorted(g, key=key, reverse=True))
    return Spectrum(
        eigenvalues=np.array([vals[i] for i in ordered], dtype=float),
        eigenvectors=tuple(PureState(vecs[i], normalize=True) for i in ordered),
    )


def eigenvalues(h) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    arr = as_matrix(h)
    return np.linalg.eigvalsh((arr + arr.conj().T) / 2)[::-1].copy()


def random_density(d: int, rank: int | None = None, seed: int = 0) -> DensityOperator:
    """Sample ``G G^dag / Tr(G G^dag)`` with ``G`` a d x rank complex Gaussian matrix."""
    rank = d if rank is None else rank
    if d < 1 or not 1 <= rank <= d:
        raise ValueError(f"need 1 <= rank <= d, got d={d}, rank={rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityOperator(m / np.trace(m).real)


def random_pure(d: int, seed: int = 0) -> PureState:
    rng = np.random.default_rng(seed)
    return PureState(rng.standard_normal(d) + 1j * rng.standard_normal(d), normalize=True)


def random_unitary(d: int, seed: int = 0) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Gaussian matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (z + z.conj().T) / 2


def basis_state(d: int, n: int) -> PureState:
    vec = np.zeros(d, dtype=np.complex128)
    vec[n] = 1.0
    return PureState(vec)


def maximally_mixed(d: int) -> DensityOperator:
    return DensityOperator(np.eye(d) / d)


def maximally_entangled(d: int) -> DensityOperator:
    """The projector P+ onto sum_k |k>|k> / sqrt(d)."""
    vec = np.eye(d, dtype=np.complex128).reshape(-1) / np.sqrt(d)
    return DensityOperator(np.outer(vec, vec.conj()))


def trace_distance(a, b) -> float:
    diff = as_matrix(a) - as_matrix(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def project_to_density(m) -> np.ndarray:
    """Nearest density operator by eigenvalue clamping and trace renormalization."""
    arr = as_matrix(m)
    arr = (arr + arr.conj().T) / 2
    vals, vecs = np.linalg.eigh(arr)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() <= 0:
        return np.eye(arr.shape[0], dtype=np.complex128) / arr.shape[0]
    vals = vals / vals.sum()
    return (vecs * vals) @ vecs.conj().T


PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def bloch_state(x: float, y: float, z: float) -> DensityOperator:
    return DensityOperator((PAULI_I + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2)


def bloch_vector(rho) -> np.ndarray:
    arr = as_matrix(rho)
    return np.array([np.trace(arr @ p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)])

"""Quantum channels in Kraus form and their Choi states.

The Choi state of a channel on d-level systems is

    rho_L = (1/d) sum_kl |k><l| (x) L(|k><l|),

with the reference system first and the channel output second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qmath
from .analysis import OverlapOracle, multi_start_search, oracle_eigenvalue_search
from .qmath import DensityOperator, DimensionError, as_matrix
from .sampling import ShotPlan, derive_seed

COMPLETENESS_TOL = 1e-10


class CriterionScopeError(ValueError):
    """The capacity criterion only applies to qubit channels."""


class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    __slots__ = ("kraus_ops", "label")

    def __init__(self, kraus_ops: Sequence, label: str = ""):
        ops = [as_matrix(k) for k in kraus_ops]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        d = ops[0].shape[1]
        for i, k in enumerate(ops):
            if k.shape != (d, d):
                raise DimensionError(f"Kraus operator {i} has shape {k.shape}; expected {(d, d)}")
        completeness = sum(k.conj().T @ k for k in ops)
        err = float(np.max(np.abs(completeness - np.eye(d))))
        if err > COMPLETENESS_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (max |sum K^dag K - I| = {err:.3g})")
        frozen = []
        for k in ops:
            k = k.copy()
            k.flags.writeable = False
            frozen.append(k)
        object.__setattr__(self, "kraus_ops", tuple(frozen))
        object.__setattr__(self, "label", label)

    def __setattr__(self, name, value):
        raise AttributeError("KrausChannel is immutable")

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    dim_in = dim_out = dim

    def __call__(self, rho) -> np.ndarray:
        return _apply(self, as_matrix(rho))

    def __repr__(self) -> str:
        return f"KrausChannel(dim={self.dim}, ops={len(self.kraus_ops)}, label={self.label!r})"


def _apply(ch: KrausChannel, arr: np.ndarray) -> np.ndarray:
    return sum(k @ arr @ k.conj().T for k in ch.kraus_ops)


def apply_channel(ch: KrausChannel, rho) -> DensityOperator:
    rho = qmath.validate_density(rho)
    if rho.dim != ch.dim:
        raise DimensionError(f"channel acts on dimension {ch.dim}, state has dimension {rho.dim}")
    return DensityOperator(_apply(ch, rho.matrix))


@dataclass(frozen=True)
class ChoiState:
    dim: int
    state: DensityOperator  # on reference (x) output

    def __post_init__(self):
        if self.state.dim != self.dim * self.dim:
            raise DimensionError(f"Choi state of a d={self.dim} channel must have dimension {self.dim ** 2}")
        dev = choi_marginal_deviation(self.state.matrix, self.dim)
        if dev > qmath.VALIDATION_TOL:
            raise ValueError(f"reference marginal differs from I/d by {dev:.3g}")

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix


def choi_marginal_deviation(m, d: int) -> float:
    reduced = qmath.partial_trace(as_matrix(m), [d, d], keep=[0])
    return float(np.max(np.abs(reduced - np.eye(d) / d)))


def choi_state(ch: KrausChannel) -> ChoiState:
    """Send half of P+ through the channel."""
    d = ch.dim
    p_plus = qmath.maximally_entangled(d).matrix
    lifted = [np.kron(np.eye(d), k) for k in ch.kraus_ops]
    out = sum(k @ p_plus @ k.conj().T for k in lifted)
    return ChoiState(d, DensityOperator(out))


def choi_state_direct(ch: KrausChannel) -> np.ndarray:
    """The same state assembled block by block from L(|k><l|)."""
    d = ch.dim
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for k in range(d):
        for l in range(d):
            unit = np.zeros((d, d), dtype=np.complex128)
            unit[k, l] = 1.0
            out[k * d:(k + 1) * d, l * d:(l + 1) * d] = _apply(ch, unit) / d
    return out


def channel_from_choi(choi: ChoiState, rho) -> DensityOperator:
    """L(rho) = d * Tr_ref[(rho^T (x) I) rho_L]."""
    if not isinstance(choi, ChoiState):
        raise TypeError("expected a ChoiState")
    rho = qmath.validate_density(rho)
    d = choi.dim
    if rho.dim != d:
        raise DimensionError(f"Choi state describes a d={d} channel, state has dimension {rho.dim}")
    product = np.kron(rho.matrix.T, np.eye(d)) @ choi.matrix
    return DensityOperator(d * qmath.partial_trace(product, [d, d], keep=[1]))


@dataclass(frozen=True)
class CapacityVerdict:
    lambda_max: float
    positive: bool


def two_way_capacity_positive(
    choi: ChoiState,
    method: str = "eigh",
    plan: ShotPlan | None = None,
    starts: int = 5,
) -> CapacityVerdict:
    """Two-way capacity of a qubit channel is positive iff lambda_max(rho_L) > 1/2.

    ``method`` picks how lambda_max is obtained: ``eigh``, ``search`` (the
    extremal search on the exact state) or ``oracle`` (the search driven by
    overlap probes, sampled when ``plan`` is given).
    """
    if choi.dim != 2:
        raise CriterionScopeError(f"criterion scope: stated for qubit channels only, got d={choi.dim}")
    if method == "eigh":
        lam = float(qmath.eigenvalues(choi.matrix)[0])
    elif method == "search":
        lam = multi_start_search(choi.matrix, "max", starts=starts, tol=1e-9).best.eigenvalue
    elif method == "oracle":
        lam = oracle_lambda_max(choi.state, plan, starts=starts)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CapacityVerdict(lam, lam > 0.5)


def oracle_lambda_max(rho, plan: ShotPlan | None = None, starts: int = 5, mode: str = "max") -> float:
    """Extremal eigenvalue from overlap probes alone, best of ``starts`` runs."""
    rho = qmath.validate_density(rho)
    best = None
    for i in range(starts):
        sub = plan.child(i) if plan is not None else None
        res = oracle_eigenvalue_search(
            OverlapOracle(rho, sub), rho.dim, mode=mode, init=derive_seed(plan.seed if plan else 0, i)
        )
        if best is None or (res.eigenvalue > best if mode == "max" else res.eigenvalue < best):
            best = res.eigenvalue
    return best


# -- catalog -----------------------------------------------------------------------


def _check_param(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} parameter must lie in [0, 1], got {p!r}")
    return p


def _weyl_operators(d: int) -> list[np.ndarray]:
    """Generalized Paulis X^a Z^b; the Pauli group up to phases when d = 2."""
    omega = np.exp(2j * math.pi / d)
    shift = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(d) for b in range(d)]


def identity_channel(d: int = 2) -> KrausChannel:
    return KrausChannel([np.eye(d)], label="identity")


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """rho -> (1 - p) rho + p I/d."""
    p = _check_param("depolarizing", p)
    ops = _weyl_operators(d)
    weights = [1.0 - p + p / d**2] + [p / d**2] * (len(ops) - 1)
    return KrausChannel([math.sqrt(w) * op for w, op in zip(weights, ops)], label=f"depolarizing:{p:g}")


def dephasing(p: float, d: int = 2) -> KrausChannel:
    """rho -> (1 - p) rho + p diag(rho); off-diagonals shrink by (1 - p)."""
    p = _check_param("dephasing", p)
    ops = [math.sqrt(1.0 - p) * np.eye(d)]
    for n in range(d):
        proj = np.zeros((d, d))
        proj[n, n] = 1.0
        ops.append(math.sqrt(p) * proj)
    return KrausChannel(ops, label=f"dephasing:{p:g}")


def amplitude_damping(g: float) -> KrausChannel:
    g = _check_param("amplitude damping", g)
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - g)]])
    k1 = np.array([[0.0, math.sqrt(g)], [0.0, 0.0]])
    return KrausChannel([k0, k1], label=f"amplitude_damping:{g:g}")


def unitary_channel(u) -> KrausChannel:
    u = as_matrix(u)
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if err > COMPLETENESS_TOL:
        raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3g})")
    return KrausChannel([u], label="unitary")


CATALOG = ("identity", "depolarizing", "dephasing", "amplitude_damping", "unitary")


def builtin_channel(name: str, param=None, d: int = 2) -> KrausChannel:
    """Catalog channel by name; ``param`` is the probability, or the matrix for ``unitary``."""
    if name == "identity":
        return identity_channel(d)
    if name in ("depolarizing", "dephasing", "amplitude_damping") and param is None:
        raise ValueError(f"{name} needs a parameter in [0, 1]")
    if name == "depolarizing":
        return depolarizing(param, d)
    if name == "dephasing":
        return dephasing(param, d)
    if name == "amplitude_damping":
        if d != 2:
            raise DimensionError("amplitude damping is defined for qubits only")
        return amplitude_damping(param)
    if name == "unitary":
        if param is None:
            raise ValueError("unitary channel needs a matrix")
        return unitary_channel(param)
    raise ValueError(f"unknown channel {name!r}; choose from {', '.join(CATALOG)}")


def parse_channel_ref(ref: str) -> KrausChannel:
    """``name`` or ``name:param`` (e.g. ``depolarizing:0.8``); ``unitary`` needs a file."""
    name, _, arg = ref.partition(":")
    if name == "unitary":
        raise ValueError("unitary channels must be given as a channel file")
    if not arg:
        return builtin_channel(name)
    try:
        param = float(arg)
    except ValueError:
        raise ValueError(f"channel parameter {arg!r} is not a number") from None
    return builtin_channel(name, param)

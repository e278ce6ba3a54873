"""Estimation procedures built on network visibilities.

Covers spectrum recovery from power traces, extremal-eigenvalue search on
the unit sphere, observable expectations through a positive embedding,
state reconstruction from overlap probes, and the two-qubit separability
test.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import qmath
from .networks import overlap, power_traces, swap_network
from .qmath import DensityOperator, DimensionError, PureState, as_matrix, eigenvalues
from .sampling import EstimateResult, ShotPlan, derive_seed, estimate_visibility

IMAG_FAIL = 0.05
RANGE_FAIL = 0.05


class SpectrumRecoveryError(ArithmeticError):
    """Power traces are inconsistent with any density operator."""


class DegenerateEmbeddingError(ValueError):
    """gamma*I + A cannot be normalized into a state."""


class PreconditionError(ValueError):
    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


# -- spectrum from power traces ------------------------------------------------


@dataclass(frozen=True)
class PowerTraceVector:
    """Estimates of Tr rho^k for k = 1..dim; the first entry is always 1."""

    dim: int
    values: tuple

    def __init__(self, values: Sequence[float], dim: int | None = None, tol: float | None = None):
        vals = [float(v) for v in values]
        dim = len(vals) if dim is None else dim
        if dim < 1 or len(vals) != dim:
            raise ValueError(f"need exactly {dim} power traces, got {len(vals)}")
        vals[0] = 1.0
        if tol is not None:
            for k, p in enumerate(vals[1:], start=2):
                lo = 1.0 / dim ** (k - 1)
                if not lo - tol <= p <= 1.0 + tol:
                    raise ValueError(f"Tr rho^{k} = {p!r} outside [{lo:.6g}, 1] (tol {tol})")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "values", tuple(vals))


def elementary_symmetric(power_sums: Sequence[float]) -> np.ndarray:
    """e_0..e_n from power sums p_1..p_n via Newton's identities."""
    p = np.asarray(power_sums, dtype=float)
    n = p.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for k in range(1, n + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e[k] = acc / k
    return e


def companion_matrix(e: np.ndarray) -> np.ndarray:
    """Companion matrix of prod_i (x - lambda_i) given its elementary symmetric e_0..e_n."""
    n = e.size - 1
    # x^n + sum_j a_j x^j with a_{n-j} = (-1)^j e_j
    a = np.array([(-1) ** (n - j) * e[n - j] for j in range(n)])
    c = np.zeros((n, n))
    c[1:, :-1] = np.eye(n - 1)
    c[:, -1] = -a
    return c


def _polish_root(e: np.ndarray, x: float, steps: int = 3) -> float:
    coeffs = np.array([(-1) ** j * e[j] for j in range(e.size)])  # highest degree first
    deriv = np.polyder(coeffs)
    for _ in range(steps):
        f, df = np.polyval(coeffs, x), np.polyval(deriv, x)
        if df == 0:
            break
        nx = x - f / df
        if not abs(np.polyval(coeffs, nx)) < abs(f):
            break
        x = nx
    return x


def _power_residual(centers: np.ndarray, mult: np.ndarray, p: np.ndarray) -> float:
    k = np.arange(1, p.size + 1)[:, None]
    return float(np.max(np.abs((mult * centers**k).sum(axis=1) - p)))


def _resolve_clusters(roots: np.ndarray, p: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Real eigenvalues from companion roots.

    An m-fold root comes back smeared over a circle of radius ~eps^(1/m),
    while the mean of the smeared group stays accurate to ~eps. Roots are
    merged closest-pair first; the grouping whose real centroids best
    reproduce the power sums wins, and isolated roots get Newton polish.
    A split +/-eps pair around zero is only resolved by positivity.
    """
    groups = [[i] for i in np.argsort(roots.real)]
    best_groups = [list(g) for g in groups]
    centers = np.array([roots[g].mean().real for g in groups])
    best = _power_residual(centers, np.ones(len(groups)), p)
    while len(groups) > 1:
        means = [roots[g].mean() for g in groups]
        i = min(range(len(groups) - 1), key=lambda j: abs(means[j + 1] - means[j]))
        groups[i:i + 2] = [groups[i] + groups[i + 1]]
        centers = np.array([roots[g].mean().real for g in groups])
        res = _power_residual(centers, np.array([len(g) for g in groups]), p)
        if res < best:
            best, best_groups = res, [list(g) for g in groups]
    # Eigenvalues cannot be negative: a negative group mirrored by a comparable
    # positive one is a split root at zero, so merge the two.
    while len(best_groups) > 1:
        low, high = (roots[g].mean().real for g in best_groups[:2])
        if not (low < 0.0 and high <= 4.0 * -low):
            break
        best_groups[0:2] = [best_groups[0] + best_groups[1]]
    out = []
    for g in best_groups:
        c = roots[g].mean().real
        if len(g) == 1 and roots[g[0]].imag == 0.0:
            c = _polish_root(e, c)
        out.extend([c] * len(g))
    return np.array(out)


def spectrum_from_power_traces(p) -> np.ndarray:
    """Eigenvalues (descending) whose power sums match ``p``.

    Roots of the characteristic polynomial are taken as eigenvalues of its
    companion matrix, polished by Newton steps, then clamped to [0, 1] and
    renormalized to unit sum.
    """
    if not isinstance(p, PowerTraceVector):
        p = PowerTraceVector(p)
    if p.dim < 2:
        return np.array([1.0])
    e = elementary_symmetric(p.values)
    roots = np.linalg.eigvals(companion_matrix(e))
    if np.max(np.abs(roots.imag)) > IMAG_FAIL:
        raise SpectrumRecoveryError(f"root with imaginary part {np.max(np.abs(roots.imag)):.3g}; power traces inconsistent")
    real = roots.real
    if real.min() < -RANGE_FAIL or real.max() > 1.0 + RANGE_FAIL:
        raise SpectrumRecoveryError(f"root outside [0, 1]: range [{real.min():.3g}, {real.max():.3g}]")
    lam = _resolve_clusters(roots, np.asarray(p.values), e)
    lam = np.clip(lam, 0.0, 1.0)
    total = lam.sum()
    lam = lam / total if total > 0 else np.full(p.dim, 1.0 / p.dim)
    return np.sort(lam)[::-1]


def estimate_power_traces(rho, plan: ShotPlan, kmax: int | None = None) -> list[EstimateResult]:
    """Sampled Tr rho^k for k = 2..kmax, one controlled-shift run per k."""
    from .networks import shift_network
    from .qmath import tensor_power

    arr = as_matrix(rho)
    kmax = arr.shape[0] if kmax is None else kmax
    out = []
    for k in range(2, kmax + 1):
        out.append(estimate_visibility(shift_network(arr.shape[0], k), tensor_power(arr, k), 0.0, plan.child(k)))
    return out


# -- extremal eigenvalue search --------------------------------------------------


@dataclass(frozen=True)
class EigenSearchResult:
    eigenvalue: float
    state: PureState
    iterations: int
    converged: bool
    trajectory: tuple
    residual: float = math.nan

    def to_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "trajectory": list(self.trajectory),
            "state": [[float(z.real), float(z.imag)] for z in self.state.amplitudes],
        }


@dataclass(frozen=True)
class MultiStartResult:
    best: EigenSearchResult
    runs: tuple = field(default=())

    def basins(self, tol: float = 1e-6) -> list[float]:
        """Distinct converged values found across starts."""
        out: list[float] = []
        for r in sorted(self.runs, key=lambda r: r.eigenvalue):
            if not out or abs(r.eigenvalue - out[-1]) > tol:
                out.append(r.eigenvalue)
        return out


def _check_mode(mode: str) -> int:
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    return 1 if mode == "max" else -1


def _initial_state(init, d: int) -> np.ndarray:
    if init is None:
        init = 0
    if isinstance(init, (int, np.integer)):
        return qmath.random_pure(d, seed=int(init)).amplitudes.copy()
    vec = init.amplitudes if isinstance(init, PureState) else np.asarray(init, dtype=np.complex128)
    if vec.size != d:
        raise DimensionError(f"initial state has dimension {vec.size}, expected {d}")
    return vec / np.linalg.norm(vec)


def _ritz_step(v: float, off: float, b: float, sign: int) -> tuple[float, float]:
    """Extremal eigenvector of [[v, off], [off, b]] as coefficients (c1, c2)."""
    vals, vecs = np.linalg.eigh(np.array([[v, off], [off, b]]))
    c = vecs[:, -1] if sign > 0 else vecs[:, 0]
    return float(c[0]), float(c[1])


def _ritz_vector(arr: np.ndarray, vectors: list, sign: int) -> np.ndarray:
    """Extremal Ritz vector of ``arr`` on the span of ``vectors``."""
    basis, r = np.linalg.qr(np.column_stack(vectors))
    keep = np.abs(np.diag(r)) > 1e-10 * max(1.0, float(np.abs(r[0, 0])))
    basis = basis[:, keep]
    small = basis.conj().T @ arr @ basis
    vals, vecs = np.linalg.eigh((small + small.conj().T) / 2)
    c = vecs[:, -1] if sign > 0 else vecs[:, 0]
    out = basis @ c
    return out / np.linalg.norm(out)


def extremal_eigenvalue_search(
    rho,
    mode: str = "max",
    init=None,
    tol: float = 1e-8,
    max_iter: int = 200,
    history: int = 2,
) -> EigenSearchResult:
    """Steepest ascent (max) or descent (min) of <psi|rho|psi> on the unit sphere.

    Each step moves along the projected gradient rho|psi> - v|psi> with an
    exact line search, taken as the extremal Ritz vector on span{psi,
    gradient}. ``history`` earlier step directions join that span:
    ``history=0`` is plain steepest descent, ``history=1`` the locally
    optimal variant. Every step stays monotone; the extra directions only
    speed up convergence on clustered spectra. Stops when the gradient norm
    drops below ``tol`` or the value changes by less than ``tol**2``.
    """
    sign = _check_mode(mode)
    if tol <= 0:
        raise ValueError("tol must be positive")
    arr = as_matrix(rho)
    d = arr.shape[0]
    psi = _initial_state(init, d)
    v = float(np.vdot(psi, arr @ psi).real)
    trajectory = [v]
    converged = False
    steps: list[np.ndarray] = []
    it = 0
    while True:
        g = arr @ psi - v * psi
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            converged = True
            break
        if it >= max_iter:
            break
        new = _ritz_vector(arr, [psi, g / gnorm, *steps], sign)
        nv = float(np.vdot(new, arr @ new).real)
        it += 1
        if sign * (nv - v) < 0:
            # Rounding only; keep the better iterate.
            trajectory.append(v)
            converged = True
            break
        if history > 0:
            step = new - psi * np.vdot(psi, new)
            if np.linalg.norm(step) > 1e-14:
                steps = [*steps, step / np.linalg.norm(step)][-history:]
        psi, dv, v = new, nv - v, nv
        trajectory.append(v)
        if abs(dv) < tol * tol:
            converged = True
            gnorm = float(np.linalg.norm(arr @ psi - v * psi))
            break
    return EigenSearchResult(
        eigenvalue=v,
        state=PureState(psi, normalize=True),
        iterations=it,
        converged=converged,
        trajectory=tuple(trajectory),
        residual=gnorm,
    )


def multi_start_search(
    rho,
    mode: str = "max",
    starts: int = 5,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 200,
    jobs: int = 1,
) -> MultiStartResult:
    """Run the search from ``starts`` random initial states and keep the extreme.

    Start ``i`` uses ``derive_seed(seed, i)``, so ``jobs > 1`` (a thread pool)
    gives the same result as a serial run.
    """
    sign = _check_mode(mode)
    if starts < 1:
        raise ValueError("need at least one start")

    def one(i):
        return extremal_eigenvalue_search(rho, mode, init=derive_seed(seed, i), tol=tol, max_iter=max_iter)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            runs = tuple(pool.map(one, range(starts)))
    else:
        runs = tuple(one(i) for i in range(starts))
    best = max(runs, key=lambda r: sign * r.eigenvalue)
    return MultiStartResult(best=best, runs=runs)


def _oracle_value(result) -> float:
    return float(result.point if isinstance(result, EstimateResult) else result)


def _pair_element(oracle, a: np.ndarray, b: np.ndarray, va: float, vb: float) -> complex:
    """<a|rho|b> from the probes (a + b)/sqrt2 and (a + i b)/sqrt2."""
    mean = 0.5 * (va + vb)
    v_plus = _oracle_value(oracle(PureState((a + b) / math.sqrt(2), normalize=True)))
    v_imag = _oracle_value(oracle(PureState((a + 1j * b) / math.sqrt(2), normalize=True)))
    return complex(v_plus - mean, mean - v_imag)


def oracle_eigenvalue_search(
    oracle: Callable,
    d: int,
    mode: str = "max",
    init=None,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> EigenSearchResult:
    """The same ascent driven only by overlap probes <psi|rho|psi>.

    The gradient components <e_j|rho|psi> along an orthonormal complement of
    psi come from pair probes; the Ritz step uses one further probe. A step
    is kept only if its probed value improves, so the trajectory is monotone
    even with a noisy oracle.
    """
    sign = _check_mode(mode)
    psi = _initial_state(init, d)
    v = _oracle_value(oracle(PureState(psi, normalize=True)))
    trajectory = [v]
    converged = False
    gnorm = math.inf
    it = 0
    while it < max_iter:
        basis, _ = np.linalg.qr(np.column_stack([psi, np.eye(d, dtype=np.complex128)]))
        comp = basis[:, 1:d]
        g = np.zeros(d, dtype=np.complex128)
        for j in range(d - 1):
            e_j = comp[:, j]
            ve = _oracle_value(oracle(PureState(e_j, normalize=True)))
            g += np.conj(_pair_element(oracle, psi, e_j, v, ve)) * e_j
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol:
            converged = True
            break
        q = g / gnorm
        b = _oracle_value(oracle(PureState(q, normalize=True)))
        c1, c2 = _ritz_step(v, gnorm, b, sign)
        new = c1 * psi + c2 * q
        new /= np.linalg.norm(new)
        nv = _oracle_value(oracle(PureState(new, normalize=True)))
        it += 1
        if sign * (nv - v) <= 0:
            converged = True
            break
        dv, psi, v = nv - v, new, nv
        trajectory.append(v)
        if abs(dv) < tol * tol:
            converged = True
            break
    return EigenSearchResult(
        eigenvalue=v,
        state=PureState(psi, normalize=True),
        iterations=it,
        converged=converged,
        trajectory=tuple(trajectory),
        residual=gnorm,
    )


# -- overlap oracles -------------------------------------------------------------


class OverlapOracle:
    """Probe |psi> -> <psi|rho|psi> through the controlled-SWAP network.

    Without a plan the exact visibility is returned. With a plan each call
    samples with its own seed, split from ``plan.seed`` by call index, so a
    fixed sequence of probes is reproducible.
    """

    def __init__(self, rho, plan: ShotPlan | None = None):
        self.rho = qmath.validate_density(rho)
        self.plan = plan
        self.calls = 0
        self._network = swap_network(self.rho.dim) if plan is not None else None

    def __call__(self, psi: PureState):
        index = self.calls
        self.calls += 1
        probe = psi.projector()
        if self.plan is None:
            return overlap(probe, self.rho)
        joint = np.kron(probe, self.rho.matrix)
        return estimate_visibility(self._network, joint, 0.0, self.plan.child(index))


# -- observables -------------------------------------------------------------------


def _embedding(a: np.ndarray, d: int, delta: float | None, gamma: float | None) -> tuple[float, np.ndarray]:
    if gamma is None:
        lam_min = float(np.linalg.eigvalsh(a)[0])
        if delta is None:
            delta = 1e-6 * max(1.0, float(np.max(np.abs(a))))
        gamma = max(0.0, -lam_min) + delta
    shifted = gamma * np.eye(d) + a
    tr = float(np.trace(shifted).real)
    if tr <= 1e-12 * max(1.0, float(np.max(np.abs(a)))):
        raise DegenerateEmbeddingError(f"Tr(gamma*I + A) = {tr:.3g}; cannot form a state")
    if float(np.linalg.eigvalsh(shifted)[0]) < -1e-10 * max(1.0, tr):
        raise DegenerateEmbeddingError(f"gamma = {gamma!r} leaves gamma*I + A indefinite")
    return gamma, shifted / tr


def _observable(a, rho) -> tuple[np.ndarray, DensityOperator]:
    a = as_matrix(a)
    rho = qmath.validate_density(rho)
    if a.shape != (rho.dim, rho.dim):
        raise DimensionError(f"observable shape {a.shape} does not match state dimension {rho.dim}")
    if qmath.hermitian_violation(a) > qmath.VALIDATION_TOL:
        raise ValueError("observable is not Hermitian")
    return (a + a.conj().T) / 2, rho


def expectation_via_network(a, rho, delta: float | None = None, gamma: float | None = None) -> float:
    """Tr(rho A) from the overlap of rho with the state (gamma*I + A)/Tr(gamma*I + A).

    With visibility v, the expectation is v*Tr(A) + gamma*(v*d - 1).
    """
    a, rho = _observable(a, rho)
    d = rho.dim
    gamma, state = _embedding(a, d, delta, gamma)
    v = overlap(state, rho)
    return v * float(np.trace(a).real) + gamma * (v * d - 1.0)


def estimate_expectation(a, rho, plan: ShotPlan, delta: float | None = None) -> EstimateResult:
    """Sampled counterpart of :func:`expectation_via_network`."""
    a, rho = _observable(a, rho)
    d = rho.dim
    gamma, state = _embedding(a, d, delta, None)
    est = estimate_visibility(swap_network(d), np.kron(state, rho.matrix), 0.0, plan)
    # v*Tr(A) + gamma*(v*d - 1) = v*(Tr A + gamma*d) - gamma
    return est.map_affine(float(np.trace(a).real) + gamma * d, -gamma)


# -- state reconstruction --------------------------------------------------------


@dataclass(frozen=True)
class Reconstruction:
    state: DensityOperator
    raw: np.ndarray  # Hermitian matrix assembled from probes, before projection
    queries: int
    warnings: tuple = ()


def reconstruction_probes(d: int) -> list[tuple[str, int, int, PureState]]:
    """The d^2 probe states: |n>, (|n>+|k>)/sqrt2 and (|n>+i|k>)/sqrt2 for n < k."""
    eye = np.eye(d, dtype=np.complex128)
    probes = [("diag", n, n, PureState(eye[n])) for n in range(d)]
    for n in range(d):
        for k in range(n + 1, d):
            probes.append(("re", n, k, PureState((eye[n] + eye[k]) / math.sqrt(2), normalize=True)))
            probes.append(("im", n, k, PureState((eye[n] + 1j * eye[k]) / math.sqrt(2), normalize=True)))
    return probes


def reconstruct_state(oracle: Callable, d: int, psd_tol: float = 1e-8) -> Reconstruction:
    """Rebuild rho from d^2 overlap probes.

    Re<n|rho|k> = v_re - (v_nn + v_kk)/2 and Im<n|rho|k> = (v_nn + v_kk)/2 - v_im.
    The assembled matrix is projected onto density operators by clamping
    negative eigenvalues; a warning is attached when that clamp exceeds
    ``psd_tol``.
    """
    values = {}
    probes = reconstruction_probes(d)
    for kind, n, k, psi in probes:
        values[kind, n, k] = _oracle_value(oracle(psi))
    raw = np.zeros((d, d), dtype=np.complex128)
    for n in range(d):
        raw[n, n] = values["diag", n, n]
    for n in range(d):
        for k in range(n + 1, d):
            mean = 0.5 * (values["diag", n, n] + values["diag", k, k])
            raw[n, k] = complex(values["re", n, k] - mean, mean - values["im", n, k])
            raw[k, n] = np.conj(raw[n, k])
    warnings = []
    lam_min = float(np.linalg.eigvalsh(raw)[0])
    if lam_min < -psd_tol:
        warnings.append(f"reconstructed matrix not positive semidefinite (min eigenvalue {lam_min:.3g}); projected")
    state = DensityOperator(qmath.project_to_density(raw))
    return Reconstruction(state=state, raw=raw, queries=len(probes), warnings=tuple(warnings))


def reconstruct_qubit_bloch(oracle: Callable) -> Reconstruction:
    """Qubit state from the three probes |0>, |+> and |+i>, one per Bloch component."""
    s = 1 / math.sqrt(2)
    probes = [
        PureState([1, 0]),
        PureState([s, s], normalize=True),
        PureState([s, 1j * s], normalize=True),
    ]
    vz, vx, vy = (_oracle_value(oracle(p)) for p in probes)
    r = np.array([2 * vx - 1, 2 * vy - 1, 2 * vz - 1])
    raw = (qmath.PAULI_I + r[0] * qmath.PAULI_X + r[1] * qmath.PAULI_Y + r[2] * qmath.PAULI_Z) / 2
    warnings = []
    if np.linalg.norm(r) > 1 + 1e-8:
        warnings.append(f"Bloch vector length {np.linalg.norm(r):.4f} exceeds 1; projected")
    return Reconstruction(DensityOperator(qmath.project_to_density(raw)), raw, 3, tuple(warnings))


# -- separability ------------------------------------------------------------------


@dataclass(frozen=True)
class SeparabilityVerdict:
    lambda_max: float
    entangled: bool

    @property
    def verdict(self) -> str:
        return "entangled-two-way-distillable" if self.entangled else "separable"


def separability_check_2qubit(rho, reduced_qubit: int = 0, method: str = "eigh", tol: float = 1e-6) -> SeparabilityVerdict:
    """Two-qubit test: entangled iff the largest eigenvalue exceeds 1/2.

    Only valid when qubit ``reduced_qubit`` has a maximally mixed reduced
    state; otherwise :class:`PreconditionError` carries the deviation.
    """
    rho = qmath.validate_density(rho)
    if rho.dim != 4:
        raise DimensionError(f"two-qubit test needs a 4x4 state, got dimension {rho.dim}")
    reduced = qmath.partial_trace(rho.matrix, [2, 2], keep=[reduced_qubit])
    deviation = float(np.linalg.norm(reduced - np.eye(2) / 2))
    if deviation > tol:
        raise PreconditionError(
            f"reduced state of qubit {reduced_qubit} is not maximally mixed (deviation {deviation:.3g})", deviation
        )
    if method == "eigh":
        lam = float(eigenvalues(rho.matrix)[0])
    elif method == "search":
        lam = multi_start_search(rho.matrix, "max", tol=1e-9).best.eigenvalue
    else:
        raise ValueError(f"unknown method {method!r}")
    return SeparabilityVerdict(lam, lam > 0.5)


def exact_power_trace_vector(rho) -> PowerTraceVector:
    return PowerTraceVector(power_traces(rho))

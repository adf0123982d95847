"""Dense multi-qudit states, local operator bundles, and distance measures.

States are stored as flat complex amplitude vectors with site 0 as the most
significant tensor factor.  Everything here is immutable after construction
and safe to share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, sqrt
from typing import Iterable, Sequence, Union

import numpy as np

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
INVERTIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class QuantumState:
    """Pure state of ``n`` qudits as a dense amplitude vector.

    Attributes:
        local_dims: per-site dimensions, site 0 first.
        amplitudes: complex vector of length ``prod(local_dims)``.
        normalized: whether the vector is claimed (and checked) to be unit.
    """

    local_dims: tuple
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        object.__setattr__(self, "local_dims", dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if any(d < 1 for d in dims):
            raise ValueError("local dimensions must be positive")
        expected = int(np.prod(dims))
        if amps.size != expected:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {expected}")
        if self.normalized and abs(self.norm_sq - 1.0) > 1e-10:
            raise ValueError("state flagged normalized but |psi|^2 != 1")

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def unit(self) -> "QuantumState":
        """Return the normalized copy of this state."""
        n = sqrt(self.norm_sq)
        if n < 1e-150:
            raise ValueError("cannot normalize a (near-)zero vector")
        return QuantumState(self.local_dims, self.amplitudes / n, True)

    def overlap(self, other: "QuantumState") -> complex:
        _check_same_dims(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.local_dims)

    def to_json(self) -> dict:
        return {
            "dims": list(self.local_dims),
            "re": np.real(self.amplitudes).tolist(),
            "im": np.imag(self.amplitudes).tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "QuantumState":
        amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        st = QuantumState(tuple(obj["dims"]), amps, normalized=False)
        return st.unit() if abs(st.norm_sq - 1.0) <= 1e-10 else st


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix over a list of site dimensions."""

    dims: tuple
    matrix: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        m = np.asarray(self.matrix, dtype=complex)
        d = int(np.prod(dims))
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within tolerance")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if abs(np.trace(m).real - 1.0) > 1e-8:
            raise ValueError("density matrix must have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


StateLike = Union[QuantumState, DensityMatrix]


class LocalOperatorBundle:
    """Tensor product of per-site square operators ``g = (x)_i g_i``.

    Caches the Gram operators ``G_i = g_i^dag g_i`` lazily.
    """

    def __init__(self, operators: Sequence[np.ndarray]):
        self.operators = tuple(np.array(op, dtype=complex) for op in operators)
        for op in self.operators:
            if op.ndim != 2 or op.shape[0] != op.shape[1]:
                raise ValueError("bundle entries must be square matrices")
        self._grams: dict = {}

    @property
    def n_sites(self) -> int:
        return len(self.operators)

    @property
    def site_dims(self) -> tuple:
        return tuple(op.shape[0] for op in self.operators)

    def gram(self, i: int) -> np.ndarray:
        if i not in self._grams:
            g = self.operators[i]
            self._grams[i] = g.conj().T @ g
        return self._grams[i]

    def min_singular_value(self) -> float:
        return min(float(np.linalg.svd(op, compute_uv=False)[-1]) for op in self.operators)

    def is_invertible(self, tol: float = INVERTIBILITY_TOL) -> bool:
        return self.min_singular_value() > tol

    def full_matrix(self) -> np.ndarray:
        m = np.ones((1, 1), dtype=complex)
        for op in self.operators:
            m = np.kron(m, op)
        return m

    def dagger(self) -> "LocalOperatorBundle":
        return LocalOperatorBundle([op.conj().T for op in self.operators])

    def compose(self, other: "LocalOperatorBundle") -> "LocalOperatorBundle":
        """Bundle applying ``other`` first, then ``self`` (site-wise product)."""
        if self.site_dims != other.site_dims:
            raise ValueError("site dimension mismatch")
        return LocalOperatorBundle([a @ b for a, b in zip(self.operators, other.operators)])

    @staticmethod
    def identity(dims: Iterable[int]) -> "LocalOperatorBundle":
        return LocalOperatorBundle([np.eye(int(d)) for d in dims])

    def to_json(self) -> dict:
        return {"sites": [{"re": np.real(op).tolist(), "im": np.imag(op).tolist()}
                          for op in self.operators]}

    @staticmethod
    def from_json(obj: dict) -> "LocalOperatorBundle":
        ops = [np.asarray(s["re"], dtype=float) + 1j * np.asarray(s["im"], dtype=float)
               for s in obj["sites"]]
        return LocalOperatorBundle(ops)


def _check_same_dims(a, b):
    da = a.local_dims if isinstance(a, QuantumState) else a.dims
    db = b.local_dims if isinstance(b, QuantumState) else b.dims
    if tuple(da) != tuple(db):
        raise ValueError(f"dimension mismatch: {da} vs {db}")


# ---------------------------------------------------------------------------
# named state constructors


def _basis_index(bits: Sequence[int], dims: Sequence[int]) -> int:
    idx = 0
    for b, d in zip(bits, dims):
        idx = idx * d + b
    return idx


def ghz_state(n: int, d: int = 2) -> QuantumState:
    """|GHZ_n^d> = sum_i |i...i> / sqrt(d)."""
    if n < 1 or d < 2:
        raise ValueError("ghz requires n >= 1 and d >= 2")
    dims = (d,) * n
    amps = np.zeros(d ** n, dtype=complex)
    for i in range(d):
        amps[_basis_index([i] * n, dims)] = 1.0 / sqrt(d)
    return QuantumState(dims, amps)


def dicke_state(n: int, k: int) -> QuantumState:
    """Equal superposition of all n-qubit strings with k excitations."""
    if not 0 <= k <= n:
        raise ValueError("dicke requires 0 <= k <= n")
    dims = (2,) * n
    amps = np.zeros(2 ** n, dtype=complex)
    w = 1.0 / sqrt(comb(n, k))
    for ones in combinations(range(n), k):
        bits = [0] * n
        for i in ones:
            bits[i] = 1
        amps[_basis_index(bits, dims)] = w
    return QuantumState(dims, amps)


def generic_seed_state() -> QuantumState:
    """Five-qubit critical seed with squared weights 7/22, 5/22 and ten 1/22.

    sqrt(7)|00000> + sqrt(5)|11111> + sum over weight-3 strings, normalized.
    """
    dims = (2,) * 5
    amps = np.zeros(32, dtype=complex)
    amps[0] = sqrt(7.0)
    amps[31] = sqrt(5.0)
    for ones in combinations(range(5), 3):
        bits = [0] * 5
        for i in ones:
            bits[i] = 1
        amps[_basis_index(bits, dims)] = 1.0
    return QuantumState(dims, amps / sqrt(22.0))


def tilted_ghz_state(n: int, d: int, weights: Sequence[float]) -> QuantumState:
    """sum_i sqrt(w_i)|i...i> for a probability vector w of length d."""
    w = np.asarray(weights, dtype=float)
    if w.size != d or np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
        raise ValueError("weights must be nonnegative and sum to 1")
    dims = (d,) * n
    amps = np.zeros(d ** n, dtype=complex)
    for i in range(d):
        amps[_basis_index([i] * n, dims)] = sqrt(w[i])
    return QuantumState(dims, amps)


def product_zero_state(n: int, d: int = 2) -> QuantumState:
    amps = np.zeros(d ** n, dtype=complex)
    amps[0] = 1.0
    return QuantumState((d,) * n, amps)


_NAMED = {
    "ghz": ghz_state,
    "dicke": dicke_state,
    "generic_seed": generic_seed_state,
    "tilted_ghz": tilted_ghz_state,
    "product_zero": product_zero_state,
}


def make_named_state(kind: str, **params) -> QuantumState:
    """Dispatch to one of the named constructors by keyword."""
    if kind not in _NAMED:
        raise ValueError(f"unknown state kind {kind!r}; choose from {sorted(_NAMED)}")
    return _NAMED[kind](**params)


def product_state(factors: Sequence[np.ndarray]) -> QuantumState:
    """Build the product state of per-site vectors (normalizing each)."""
    amps = np.ones(1, dtype=complex)
    dims = []
    for f in factors:
        v = np.asarray(f, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if n < 1e-150:
            raise ValueError("zero factor in product state")
        amps = np.kron(amps, v / n)
        dims.append(v.size)
    return QuantumState(tuple(dims), amps)


# ---------------------------------------------------------------------------
# operations


def apply_single_site(vec: np.ndarray, op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Apply a one-site operator to a flat amplitude vector."""
    t = vec.reshape(dims)
    t = np.moveaxis(t, site, 0)
    shape = t.shape
    t = op @ t.reshape(shape[0], -1)
    t = np.moveaxis(t.reshape(shape), 0, site)
    return t.reshape(-1)


def apply_local(bundle: LocalOperatorBundle, state: QuantumState) -> QuantumState:
    """Apply ``(x)_i g_i`` to the state.

    The result is returned unnormalized with the ``normalized`` flag cleared;
    its squared norm is available as ``result.norm_sq``.
    """
    if bundle.site_dims != state.local_dims:
        raise ValueError(
            f"bundle site dims {bundle.site_dims} do not match state {state.local_dims}")
    vec = state.amplitudes
    for i, op in enumerate(bundle.operators):
        vec = apply_single_site(vec, op, i, state.local_dims)
    return QuantumState(state.local_dims, vec, normalized=False)


def reduced_density(state: QuantumState, keep: Iterable[int]) -> DensityMatrix:
    """Partial trace onto the (sorted) site subset ``keep``."""
    keep = sorted(set(int(i) for i in keep))
    n = state.n_sites
    if not keep or len(keep) >= n:
        raise ValueError("keep must be a nonempty proper subset of sites")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError("site index out of range")
    psi = state.amplitudes
    nrm = state.norm_sq
    if abs(nrm - 1.0) > 1e-10:
        psi = psi / sqrt(nrm)
    t = psi.reshape(state.local_dims)
    comp = [i for i in range(n) if i not in keep]
    rho = np.tensordot(t, t.conj(), axes=(comp, comp))
    d = int(np.prod([state.local_dims[i] for i in keep]))
    return DensityMatrix(tuple(state.local_dims[i] for i in keep), rho.reshape(d, d))


def as_density(x: StateLike) -> DensityMatrix:
    if isinstance(x, DensityMatrix):
        return x
    psi = x.amplitudes
    nrm = x.norm_sq
    if abs(nrm - 1.0) > 1e-10:
        psi = psi / sqrt(nrm)
    return DensityMatrix(x.local_dims, np.outer(psi, psi.conj()))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if vals.min() < -PSD_TOL:
        raise ValueError("matrix is not PSD within tolerance")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(a: StateLike, b: StateLike) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Pure inputs use the overlap shortcuts; mixed-mixed goes through
    an eigendecomposition with negative-eigenvalue clamping.
    """
    _check_same_dims(a, b)
    if isinstance(a, QuantumState) and isinstance(b, QuantumState):
        ua, ub = a.unit(), b.unit()
        return float(min(abs(ua.overlap(ub)) ** 2, 1.0))
    if isinstance(a, QuantumState):
        a, b = b, a
    if isinstance(b, QuantumState):
        v = b.unit().amplitudes
        val = float(np.real(v.conj() @ a.matrix @ v))
        return float(min(max(val, 0.0), 1.0))
    ra = _psd_sqrt(a.matrix)
    inner = ra @ b.matrix @ ra
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    if vals.min() < -PSD_TOL:
        raise ValueError("fidelity inner matrix not PSD within tolerance")
    vals = np.clip(vals, 0.0, None)
    return float(min(np.sum(np.sqrt(vals)) ** 2, 1.0))


def trace_distance(a: StateLike, b: StateLike) -> float:
    """D(rho, sigma) = ||rho - sigma||_1 / 2."""
    _check_same_dims(a, b)
    diff = as_density(a).matrix - as_density(b).matrix
    vals = np.linalg.eigvalsh(diff)
    return float(min(0.5 * np.sum(np.abs(vals)), 1.0))


def spectrum(rho: DensityMatrix) -> np.ndarray:
    """Eigenvalues of a density matrix, sorted descending."""
    vals = np.linalg.eigvalsh(rho.matrix)
    return np.sort(vals)[::-1]


def pure_deficit(a: QuantumState, b: QuantumState) -> float:
    """1 - |<a|b>|^2 for unit vectors, computed via the residual vector.

    Stable for nearly identical states, where forming the fidelity first
    would round to 1; the residual norm keeps ~8 significant digits even
    for deficits near 1e-24.
    """
    _check_same_dims(a, b)
    va, vb = a.unit().amplitudes, b.unit().amplitudes
    c = np.vdot(va, vb)
    r = vb - c * va
    return float(np.real(np.vdot(r, r)))


# ---------------------------------------------------------------------------
# random generators (used by the verification suites)


def random_state(dims: Sequence[int], rng: np.random.Generator) -> QuantumState:
    d = int(np.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return QuantumState(tuple(dims), v / np.linalg.norm(v))


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int = 0) -> DensityMatrix:
    d = int(np.prod(dims))
    rank = rank or d
    a = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = a @ a.conj().T
    return DensityMatrix(tuple(dims), m / np.trace(m).real)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_product_state(dims: Sequence[int], rng: np.random.Generator) -> QuantumState:
    factors = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims]
    return product_state(factors)


def state_json_dumps(state: QuantumState) -> str:
    return json.dumps(state.to_json())

"""Bipartite conversion theory: Schmidt data, majorization, conversion
probabilities, ensemble criteria, and the optimal faithful fidelity.

All functions work on sorted Schmidt vectors (squared Schmidt coefficients,
descending).  Vectors of unequal length are zero-padded before comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .states import QuantumState, reduced_density, spectrum

MAJORIZATION_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class SchmidtVector:
    """Sorted, nonnegative coefficient vector summing to one."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise ValueError("empty Schmidt vector")
        if np.any(c < -MAJORIZATION_TOL):
            raise ValueError("Schmidt coefficients must be nonnegative")
        c = np.clip(c, 0.0, None)
        if abs(c.sum() - 1.0) > 1e-9:
            raise ValueError("Schmidt coefficients must sum to 1")
        c = np.sort(c)[::-1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return self.coeffs.size

    @property
    def rank(self) -> int:
        return int(np.sum(self.coeffs > RANK_TOL))

    def padded(self, length: int) -> np.ndarray:
        if length < len(self):
            raise ValueError("cannot pad to a shorter length")
        out = np.zeros(length)
        out[: len(self)] = self.coeffs
        return out


@dataclass(frozen=True)
class BipartiteEnsembleSpec:
    """Finite list of (probability, SchmidtVector) targets."""

    members: tuple

    def __post_init__(self):
        ms = tuple((float(p), sv) for p, sv in self.members)
        if not ms:
            raise ValueError("empty ensemble")
        if any(p <= 0 for p, _ in ms):
            raise ValueError("ensemble probabilities must be positive")
        if abs(sum(p for p, _ in ms) - 1.0) > MAJORIZATION_TOL:
            raise ValueError("ensemble probabilities must sum to 1")
        object.__setattr__(self, "members", ms)


def schmidt_vector(state: QuantumState, cut) -> SchmidtVector:
    """Schmidt vector of a pure state across the given site subset."""
    rho = reduced_density(state.unit(), cut)
    return SchmidtVector(np.clip(spectrum(rho), 0.0, None) / 1.0)


def _pad_pair(x: SchmidtVector, y: SchmidtVector):
    n = max(len(x), len(y))
    return x.padded(n), y.padded(n)


def majorizes(x: SchmidtVector, y: SchmidtVector, tol: float = MAJORIZATION_TOL) -> bool:
    """True iff y is majorized by x (all partial sums of x dominate y's)."""
    xs, ys = _pad_pair(x, y)
    return bool(np.all(np.cumsum(xs) >= np.cumsum(ys) - tol))


def nielsen_convertible(psi: SchmidtVector, phi: SchmidtVector) -> bool:
    """Deterministic convertibility: possible iff psi is majorized by phi."""
    return majorizes(phi, psi)


def vidal_monotone(psi: SchmidtVector, l: int) -> float:
    """E_l = tail sum of the sorted coefficients from index l."""
    if not 0 <= l < len(psi):
        raise IndexError(f"monotone index {l} out of range for length {len(psi)}")
    return float(np.sum(psi.coeffs[l:]))


def pmax_bipartite(psi: SchmidtVector, phi: SchmidtVector) -> float:
    """Optimal conversion probability min_l E_l(psi)/E_l(phi).

    Ratios with a vanishing denominator are skipped; a Schmidt-rank
    increase therefore returns 0 through the vanishing-numerator ratios.
    """
    xs, ys = _pad_pair(psi, phi)
    ex = np.cumsum(xs[::-1])[::-1]
    ey = np.cumsum(ys[::-1])[::-1]
    best = 1.0
    for num, den in zip(ex, ey):
        if den <= RANK_TOL * RANK_TOL:
            continue
        best = min(best, num / den)
    return float(min(max(best, 0.0), 1.0))


def ensemble_feasible(psi: SchmidtVector, spec: BipartiteEnsembleSpec,
                      tol: float = MAJORIZATION_TOL) -> bool:
    """Ensemble criterion: E_l(psi) >= sum_i p_i E_l(phi_i) for every l."""
    n = max(len(psi), max(len(sv) for _, sv in spec.members))
    ex = np.cumsum(psi.padded(n)[::-1])[::-1]
    mix = np.zeros(n)
    for p, sv in spec.members:
        mix += p * np.cumsum(sv.padded(n)[::-1])[::-1]
    return bool(np.all(ex >= mix - tol))


def _objective_sqrt_overlap(x: np.ndarray, phi: np.ndarray) -> float:
    return float(np.sum(np.sqrt(np.clip(x, 0.0, None) * phi)))


def _vjn_block_candidate(psi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Piecewise-proportional candidate: recursively pin the worst tail ratio.

    On each segment [0, l*) the tail block [l*, end) is set proportional to
    phi with the minimal tail-ratio scale, which keeps the prefix-sum
    constraints tight exactly where they bind.
    """
    n = psi.size
    out = np.zeros(n)
    lo, hi = 0, n
    tail_psi = np.concatenate([np.cumsum(psi[::-1])[::-1], [0.0]])
    tail_phi = np.concatenate([np.cumsum(phi[::-1])[::-1], [0.0]])
    while hi > lo:
        best_l, best_r = lo, np.inf
        for l in range(lo, hi):
            den = tail_phi[l] - tail_phi[hi]
            if den <= 1e-15:
                continue
            r = (tail_psi[l] - tail_psi[hi]) / den
            if r < best_r - 1e-15:
                best_r, best_l = r, l
        if not np.isfinite(best_r):
            out[lo:hi] = psi[lo:hi]
            break
        out[best_l:hi] = best_r * phi[best_l:hi]
        hi = best_l
    return out


def optimal_faithful_fidelity(psi: SchmidtVector, phi: SchmidtVector,
                              restarts: int = 20, seed: int = 7,
                              ) -> Tuple[float, SchmidtVector]:
    """Best deterministic-transformation fidelity toward ``phi``.

    Maximizes (sum_i sqrt(x_i phi_i))^2 over sorted vectors x that majorize
    psi, by multistart local ascent of the concave objective over the
    majorization polytope plus exact structural candidates.  Returns the
    value and a maximizer.
    """
    n = max(len(psi), len(phi))
    ps, ph = psi.padded(n), phi.padded(n)
    pre = np.cumsum(ps)

    cons = [{"type": "eq", "fun": lambda x: np.sum(x) - 1.0}]
    for k in range(n - 1):
        cons.append({"type": "ineq", "fun": (lambda x, k=k: np.sum(x[: k + 1]) - pre[k])})
    bounds = [(0.0, 1.0)] * n

    def neg(x):
        return -_objective_sqrt_overlap(x, ph)

    candidates = [ps.copy(), _vjn_block_candidate(ps, ph)]
    if nielsen_convertible(psi, phi):
        candidates.append(ph.copy())

    rng = np.random.default_rng(seed)
    starts = list(candidates)
    for _ in range(restarts):
        w = rng.dirichlet(np.ones(n))
        starts.append(0.5 * ps + 0.5 * np.sort(w)[::-1])

    best_val, best_x = -np.inf, ps
    for x0 in starts:
        res = minimize(neg, x0, method="SLSQP", bounds=bounds, constraints=cons,
                       options=dict(maxiter=300, ftol=1e-14))
        x = np.sort(np.clip(res.x, 0.0, None))[::-1]
        s = x.sum()
        if s <= 0:
            continue
        x = x / s
        if not np.all(np.cumsum(x) >= pre - 1e-9):
            continue
        val = _objective_sqrt_overlap(x, ph)
        if val > best_val:
            best_val, best_x = val, x
    for x in candidates:
        x = np.sort(np.clip(x, 0.0, None))[::-1]
        if x.sum() <= 0 or not np.all(np.cumsum(x / x.sum()) >= pre - 1e-9):
            continue
        val = _objective_sqrt_overlap(x / x.sum(), ph)
        if val > best_val:
            best_val, best_x = val, x / x.sum()
    return float(min(best_val ** 2, 1.0)), SchmidtVector(best_x)


def two_unitary_fidelity_max(psi: QuantumState, phi: QuantumState, cut) -> float:
    """Closed-form fidelity maximum over bipartite unitaries across ``cut``.

    Equals (sum_i sqrt(mu_i(rho_cut(psi)) mu_i(rho_cut(phi))))^2 with both
    spectra sorted descending; upper-bounds the local-unitary optimum.
    """
    mu_a = np.clip(spectrum(reduced_density(psi.unit(), cut)), 0.0, None)
    mu_b = np.clip(spectrum(reduced_density(phi.unit(), cut)), 0.0, None)
    n = max(mu_a.size, mu_b.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: mu_a.size] = mu_a
    b[: mu_b.size] = mu_b
    return float(min(np.sum(np.sqrt(a * b)) ** 2, 1.0))

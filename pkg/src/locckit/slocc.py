"""Generic SLOCC-class tools: conversion probability, product-probe
monotones, separable-map feasibility residuals, and the invertibility
perturbation for two-outcome measurements.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from .states import (INVERTIBILITY_TOL, LocalOperatorBundle, QuantumState,
                     apply_local, reduced_density, spectrum)

SYMMETRY_TOL = 1e-10
ANNIHILATOR_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
FEASIBILITY_TOL = 1e-8
MARGINAL_TOL = 1e-10


class SloccClassState:
    """State ``g|seed>/n_g`` inside the SLOCC class of a fixed seed."""

    def __init__(self, seed: QuantumState, bundle: LocalOperatorBundle):
        if bundle.site_dims != seed.local_dims:
            raise ValueError("bundle does not match seed dimensions")
        if not bundle.is_invertible():
            raise ValueError("class representatives need invertible bundles")
        self.seed = seed.unit()
        self.bundle = bundle
        raw = apply_local(bundle, self.seed)
        self.nsq = raw.norm_sq
        if self.nsq <= 0:
            raise ValueError("bundle annihilates the seed")
        self.state = raw.unit()

    @property
    def site_dims(self) -> tuple:
        return self.seed.local_dims

    def gram_bundle(self) -> LocalOperatorBundle:
        return LocalOperatorBundle([self.bundle.gram(i) for i in range(self.bundle.n_sites)])


class SymmetrySet:
    """Local invertible bundles leaving the seed invariant."""

    def __init__(self, seed: QuantumState, bundles: Sequence[LocalOperatorBundle]):
        seed = seed.unit()
        for k, b in enumerate(bundles):
            img = apply_local(b, seed)
            if np.linalg.norm(img.amplitudes - seed.amplitudes) > SYMMETRY_TOL:
                raise ValueError(f"bundle {k} does not stabilize the seed")
        self.seed = seed
        self.bundles = list(bundles)

    def __len__(self):
        return len(self.bundles)

    @staticmethod
    def trivial(seed: QuantumState) -> "SymmetrySet":
        return SymmetrySet(seed, [LocalOperatorBundle.identity(seed.local_dims)])


class AnnihilatorSet:
    """Local bundles (singular allowed) mapping a reference state to zero."""

    def __init__(self, target: QuantumState, bundles: Sequence[LocalOperatorBundle]):
        target = target.unit()
        for k, b in enumerate(bundles):
            img = apply_local(b, target)
            if np.sqrt(img.norm_sq) > ANNIHILATOR_TOL:
                raise ValueError(f"bundle {k} does not annihilate the state")
        self.target = target
        self.bundles = list(bundles)

    def __len__(self):
        return len(self.bundles)

    @staticmethod
    def empty(target: QuantumState) -> "AnnihilatorSet":
        return AnnihilatorSet(target, [])


@dataclass(frozen=True)
class LocalMeasurement:
    """Two-outcome single-site measurement (M0, M1) with M0+M0 + M1+M1 = 1."""

    m0: np.ndarray
    m1: np.ndarray

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=complex)
        m1 = np.asarray(self.m1, dtype=complex)
        if m0.shape != m1.shape or m0.ndim != 2 or m0.shape[0] != m0.shape[1]:
            raise ValueError("measurement operators must be equal-size square matrices")
        object.__setattr__(self, "m0", m0)
        object.__setattr__(self, "m1", m1)
        if self.completeness_residual() > COMPLETENESS_TOL:
            raise ValueError("measurement is not complete within tolerance")

    def completeness_residual(self) -> float:
        d = self.m0.shape[0]
        s = self.m0.conj().T @ self.m0 + self.m1.conj().T @ self.m1
        return float(np.max(np.abs(s - np.eye(d))))

    def min_singular_values(self) -> Tuple[float, float]:
        s0 = np.linalg.svd(self.m0, compute_uv=False)[-1]
        s1 = np.linalg.svd(self.m1, compute_uv=False)[-1]
        return float(s0), float(s1)


# ---------------------------------------------------------------------------


def pmax_generic(source: SloccClassState, h: LocalOperatorBundle) -> float:
    """Optimal probability of converting the source to ``h`` applied to it.

    n_h^2 / prod_i mu_max(H_i), where n_h is the norm of h applied to the
    (normalized) source state and H_i = h_i^dag h_i.  Clamped to [0, 1].
    """
    if not h.is_invertible():
        raise ValueError("target bundle must be invertible")
    raw = apply_local(h, source.state)
    denom = 1.0
    for i in range(h.n_sites):
        denom *= float(np.max(np.linalg.eigvalsh(h.gram(i))))
    return float(min(max(raw.norm_sq / denom, 0.0), 1.0))


def _is_product(x: QuantumState, tol: float = 1e-8) -> bool:
    if x.n_sites == 1:
        return True
    for i in range(x.n_sites):
        mu = spectrum(reduced_density(x.unit(), [i]))
        if 1.0 - float(mu[0]) > tol:
            return False
    return True


def monotone_Ex(x: QuantumState, state: SloccClassState) -> float:
    """Product-probe entanglement monotone <x|G|x>/n_g^2 with G = (x)_i G_i."""
    if not _is_product(x):
        raise ValueError("probe must be a product state")
    if x.local_dims != state.site_dims:
        raise ValueError("probe dimensions do not match the class")
    gx = apply_local(state.gram_bundle(), x.unit())
    val = float(np.real(np.vdot(x.unit().amplitudes, gx.amplitudes)))
    return val / state.nsq


def _conjugated(full: np.ndarray, s: LocalOperatorBundle) -> np.ndarray:
    sm = s.full_matrix()
    return sm.conj().T @ full @ sm


def sep_deterministic_residual(G: LocalOperatorBundle, H: LocalOperatorBundle,
                               r: float, probs: Sequence[float],
                               syms: SymmetrySet, annis: AnnihilatorSet,
                               g: LocalOperatorBundle) -> float:
    """Operator-norm residual of the deterministic separable-map equation.

    || (1/r) sum_k p_k S_k^dag H S_k + g^dag (sum_q N_q^dag N_q) g - G ||.
    A residual of 0 (within 1e-8) certifies the map.
    """
    if len(probs) != len(syms):
        raise ValueError("probability list must align with the symmetry set")
    if r <= 0:
        raise ValueError("norm ratio r must be positive")
    hfull = H.full_matrix()
    acc = np.zeros_like(hfull)
    for p, s in zip(probs, syms.bundles):
        acc += (p / r) * _conjugated(hfull, s)
    if len(annis):
        gfull = g.full_matrix()
        nsum = np.zeros_like(acc)
        for nb in annis.bundles:
            nf = nb.full_matrix()
            nsum += nf.conj().T @ nf
        acc += gfull.conj().T @ nsum @ gfull
    return float(np.linalg.norm(acc - G.full_matrix(), 2))


def sep_ensemble_residual(G: LocalOperatorBundle,
                          targets: Sequence[Tuple[float, LocalOperatorBundle, float]],
                          weights: np.ndarray,
                          syms: SymmetrySet, annis: AnnihilatorSet,
                          g: LocalOperatorBundle) -> float:
    """Residual of the ensemble separable-map equation.

    ``targets`` lists (p_i, H_i, r_i); ``weights`` is the p_ij matrix over
    (target, symmetry) whose rows must sum to the p_i within 1e-10.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(targets), len(syms)):
        raise ValueError("weight matrix shape must be (n_targets, n_symmetries)")
    if np.any(w < -MARGINAL_TOL):
        raise ValueError("weights must be nonnegative")
    for i, (p_i, _, _) in enumerate(targets):
        if abs(w[i].sum() - p_i) > MARGINAL_TOL:
            raise ValueError(f"weight marginal {i} violates its target probability")
    acc = None
    for i, (_, h_i, r_i) in enumerate(targets):
        hfull = h_i.full_matrix()
        if acc is None:
            acc = np.zeros_like(hfull)
        for j, s in enumerate(syms.bundles):
            if w[i, j] != 0.0:
                acc += (w[i, j] / r_i) * _conjugated(hfull, s)
    if len(annis):
        gfull = g.full_matrix()
        nsum = np.zeros_like(acc)
        for nb in annis.bundles:
            nf = nb.full_matrix()
            nsum += nf.conj().T @ nf
        acc += gfull.conj().T @ nsum @ gfull
    return float(np.linalg.norm(acc - G.full_matrix(), 2))


def sep1_feasibility_solve(G: LocalOperatorBundle,
                           targets: Sequence[Tuple[float, LocalOperatorBundle, float]],
                           syms: SymmetrySet,
                           ) -> Tuple[bool, np.ndarray]:
    """Solve for nonnegative weights p_ij satisfying the ensemble equation
    without annihilator terms (the invertible-operator restriction).

    Minimizes the residual by nonnegative least squares on the vectorized
    operator equation with the marginal constraints enforced by penalty
    rows, then rescales each row to its exact marginal.  Feasible iff the
    final residual is below 1e-8.
    """
    if len(syms) == 0:
        raise ValueError("symmetry set must be nonempty")
    nt, ns = len(targets), len(syms)
    gfull = G.full_matrix()
    d2 = gfull.size
    cols = []
    for (_, h_i, r_i) in targets:
        hfull = h_i.full_matrix()
        for s in syms.bundles:
            cols.append((_conjugated(hfull, s) / r_i).reshape(-1))
    a_cplx = np.stack(cols, axis=1)
    a = np.vstack([np.real(a_cplx), np.imag(a_cplx)])
    b = np.concatenate([np.real(gfull.reshape(-1)), np.imag(gfull.reshape(-1))])

    scale = max(float(np.linalg.norm(b)), 1.0)
    kappa = 1e6 * scale
    rows = np.zeros((nt, nt * ns))
    marg = np.zeros(nt)
    for i, (p_i, _, _) in enumerate(targets):
        rows[i, i * ns:(i + 1) * ns] = kappa
        marg[i] = kappa * p_i
    a_aug = np.vstack([a, rows])
    b_aug = np.concatenate([b, marg])
    sol, _ = nnls(a_aug, b_aug)
    w = sol.reshape(nt, ns)
    for i, (p_i, _, _) in enumerate(targets):
        s = w[i].sum()
        if s > 0:
            w[i] *= p_i / s
        elif ns > 0:
            w[i, 0] = p_i
    dummy_annis = AnnihilatorSet(_unit_placeholder(G), [])
    resid = sep_ensemble_residual(G, targets, w, syms, dummy_annis,
                                  LocalOperatorBundle.identity(G.site_dims))
    return resid < FEASIBILITY_TOL, w


def _unit_placeholder(G: LocalOperatorBundle) -> QuantumState:
    d = int(np.prod(G.site_dims))
    amps = np.zeros(d, dtype=complex)
    amps[0] = 1.0
    return QuantumState(G.site_dims, amps)


def chi_perturb(m: LocalMeasurement, chi: float) -> LocalMeasurement:
    """Make both outcomes of a two-outcome measurement invertible.

    Full-rank pairs are returned unchanged.  Otherwise each outcome is
    replaced by U_i V sqrt((1-chi) D_i^2 + chi D_{i+1}^2) V^dag using the
    shared eigenbasis of the polar parts; completeness is preserved and
    both outputs are invertible for every chi in (0, 1), converging to the
    inputs as chi -> 0.
    """
    if not 0.0 < chi < 1.0:
        raise ValueError("chi must lie strictly between 0 and 1")
    s0, s1 = m.min_singular_values()
    if min(s0, s1) > INVERTIBILITY_TOL:
        return m

    q0 = m.m0.conj().T @ m.m0
    vals0, v = np.linalg.eigh(0.5 * (q0 + q0.conj().T))
    d0sq = np.clip(vals0, 0.0, None)
    d1sq = np.clip(1.0 - d0sq, 0.0, None)

    def polar_unitary(mat):
        u, _, vh = np.linalg.svd(mat)
        return u @ vh

    u0 = polar_unitary(m.m0 @ v)  # unitary part of M_i in the shared basis
    u1 = polar_unitary(m.m1 @ v)
    new0 = u0 @ np.diag(np.sqrt((1 - chi) * d0sq + chi * d1sq)) @ v.conj().T
    new1 = u1 @ np.diag(np.sqrt((1 - chi) * d1sq + chi * d0sq)) @ v.conj().T
    return LocalMeasurement(new0, new1)

"""Verification suites: every headline quantity is recomputed and compared
against its closed form, an independent oracle, or a frozen regression
anchor.  The CLI ``verify`` subcommand and the acceptance tests share
these checks.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from itertools import combinations_with_replacement
from math import sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import bounds, seedfamily as fam
from .bipartite import (SchmidtVector, majorizes, nielsen_convertible,
                        optimal_faithful_fidelity, pmax_bipartite,
                        two_unitary_fidelity_max, vidal_monotone)
from .optimize import (OptimizerConfig, lu_fidelity_bounds, lu_fidelity_lower,
                       nearest_symmetric_product)
from .protocols import (lemma3_witness, osbp_report, run_sequential_protocol,
                        verify_ensemble_monotones)
from .slocc import (LocalMeasurement, SloccClassState, chi_perturb,
                    pmax_generic)
from .states import (LocalOperatorBundle, QuantumState, apply_local,
                     fidelity, ghz_state, product_zero_state, pure_deficit,
                     random_density, random_product_state, random_state,
                     trace_distance)

# frozen regression anchors (first verified run of this code base)
REG_LAMBDA0 = 0.069538754145          # F_osbp crossing of the two-unitary bound
REG_SALVAGE_QUARTER = 0.998342668147  # salvage objective, party 1, lam = 1/4
LAMBDA0_WINDOW = (0.05, 0.09)
SWITCH_POINT = 0.00416                # nearest-product switch tilt
SWITCH_TOL = 5e-4

GHZ_BISEP = 81.0 / 97.0
GHZ_LU_UPPER = 169.0 / 194.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    target: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: measured={self.measured:.12g} "
                f"target={self.target:.12g} tol={self.tolerance:.3g}"
                + (f" ({self.note})" if self.note else ""))


def _close(name, measured, target, tol, note="") -> CheckResult:
    return CheckResult(name, float(measured), float(target), float(tol),
                       bool(abs(measured - target) <= tol), note)


def _below(name, measured, bound, note="") -> CheckResult:
    return CheckResult(name, float(measured), float(bound), 0.0,
                       bool(measured < bound), note)


def _tilted_ghz_pair():
    ghz5 = ghz_state(5)
    tilt = LocalOperatorBundle([np.eye(2)] * 4 + [np.diag([2.0 / 3.0, 1.5])])
    return ghz5, apply_local(tilt, ghz5).unit()


# ---------------------------------------------------------------------------
# criterion 1: five-qubit GHZ example constants


def check_ghz_constants() -> List[CheckResult]:
    ghz5, phi = _tilted_ghz_pair()
    bisep = max(bounds.bisep_max_fidelity(phi, [0]),
                bounds.bisep_max_fidelity(phi, [0, 1]))
    lu_upper = two_unitary_fidelity_max(ghz5, phi, [0])
    eps = bounds.epsilon_threshold(lu_upper)
    s = sqrt(1.0 - GHZ_LU_UPPER)
    eps_closed = 0.5 * (1.0 - sqrt(1.0 + 4.0 * s) + 2.0 * s)
    return [
        _close("ghz.bisep_max", bisep, GHZ_BISEP, 1e-12),
        _close("ghz.lu_upper", lu_upper, GHZ_LU_UPPER, 1e-12),
        _close("ghz.eps_threshold", eps, eps_closed, 1e-6),
        _close("ghz.eps_threshold_quoted", eps, 0.0786, 1e-4,
               "matches the 3-digit published rounding"),
    ]


# ---------------------------------------------------------------------------
# criterion 5: conversion probability consistency


def check_pmax_consistency(n_random: int = 20, seed: int = 11) -> List[CheckResult]:
    out = []
    source = SloccClassState(fam.seed_state(),
                             LocalOperatorBundle.identity((2,) * 5))
    hand = 414158.0 / 1299078.0        # (7 p^10 + 10 p^4 q^6 + 5 q^10)/(22 p^10)
    quarter = pmax_generic(source, fam.tilt_bundle(0.25))
    out.append(_close("pmax.quarter_vs_hand_oracle", quarter, hand, 1e-5))
    out.append(_close("pmax.quarter_vs_sequential",
                      fam.prefix_success(0.25, 5), quarter, 1e-10))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for lam in rng.uniform(0.02, 0.48, size=n_random):
        a = pmax_generic(source, fam.tilt_bundle(float(lam)))
        b = fam.prefix_success(float(lam), 5)
        worst = max(worst, abs(a - b))
    out.append(_close("pmax.sequential_leaf_agreement", worst, 0.0, 1e-10,
                      f"max |diff| over {n_random} random tilts"))
    return out


# ---------------------------------------------------------------------------
# criterion 2: nearest-product switch


def _is_all_zero_product(state: QuantumState) -> bool:
    return abs(abs(state.amplitudes[0]) - 1.0) < 1e-9


def check_nearest_product(full: bool = False) -> List[CheckResult]:
    out = []
    grid = np.concatenate([np.arange(0.005, 0.045, 0.005),
                           np.arange(0.05, 0.50, 0.044)]) if full else \
        np.array([0.005, 0.05, 0.3, 0.49])
    all_zero = True
    for lam in grid:
        st, _ = nearest_symmetric_product(fam.phi_state(float(lam)))
        all_zero = all_zero and _is_all_zero_product(st)
    out.append(CheckResult("nearest.upper_region_is_00000", float(all_zero),
                           1.0, 0.0, all_zero,
                           f"{len(grid)} tilts in [0.005, 0.49]"))
    st, _ = nearest_symmetric_product(fam.phi_state(0.003))
    out.append(CheckResult("nearest.below_switch_is_tilted",
                           float(not _is_all_zero_product(st)), 1.0, 0.0,
                           not _is_all_zero_product(st)))
    lo, hi = 0.001, 0.02
    for _ in range(16):
        mid = 0.5 * (lo + hi)
        st, _ = nearest_symmetric_product(fam.phi_state(mid))
        if _is_all_zero_product(st):
            hi = mid
        else:
            lo = mid
    out.append(_close("nearest.switch_point", 0.5 * (lo + hi), SWITCH_POINT,
                      SWITCH_TOL))
    return out


# ---------------------------------------------------------------------------
# criterion 6: bipartite oracle equivalence


def _simplex_grid(d: int, step: float) -> List[np.ndarray]:
    n = int(round(1.0 / step))
    out = []
    for parts in combinations_with_replacement(range(n + 1), d - 1):
        cuts = (0,) + parts + (n,)
        vec = np.diff(cuts) * step
        vec = np.sort(vec)[::-1]
        if vec[0] > 0:
            out.append(vec)
    uniq = {tuple(np.round(v, 12)) for v in out}
    return [np.array(v) for v in sorted(uniq, reverse=True)]


def _brute_partial_sums(psi: np.ndarray, phi: np.ndarray) -> bool:
    n = max(psi.size, phi.size)
    a = np.zeros(n); a[: psi.size] = psi
    b = np.zeros(n); b[: phi.size] = phi
    tot_a = tot_b = 0.0
    for i in range(n):
        tot_a += b[i]  # target partial sums must dominate
        tot_b += a[i]
        if tot_a < tot_b - 1e-12:
            return False
    return True


def _brute_min_ratio(psi: np.ndarray, phi: np.ndarray) -> float:
    n = max(psi.size, phi.size)
    a = np.zeros(n); a[: psi.size] = psi
    b = np.zeros(n); b[: phi.size] = phi
    best = 1.0
    for l in range(n):
        num = float(np.sum(a[l:]))
        den = float(np.sum(b[l:]))
        if den > 1e-20:
            best = min(best, num / den)
    return max(0.0, min(best, 1.0))


def faithful_grid_oracle(psi: np.ndarray, phi: np.ndarray,
                         coarse: int = 200, zooms: int = 4) -> float:
    """Dense polytope grid search for the optimal faithful fidelity (d <= 3).

    Works in cumulative-sum coordinates, where the prefix constraints turn
    into box lower bounds: binding faces then sit exactly on the grid.  The
    sortedness constraint can be dropped (sorting a feasible point never
    lowers the objective against a sorted target).
    """
    d = max(psi.size, phi.size)
    ps = np.zeros(d); ps[: psi.size] = psi
    ph = np.sort(np.zeros(d) + np.pad(phi, (0, d - phi.size)))[::-1]
    if d == 1:
        return 1.0

    if d == 2:
        lo, hi = ps[0], 1.0
        best = -1.0
        for _ in range(zooms + 1):
            xs = np.linspace(lo, hi, coarse * 10)
            v = np.sqrt(xs * ph[0]) + np.sqrt((1.0 - xs) * ph[1])
            i = int(np.argmax(v))
            best = max(best, float(v[i]))
            w = max((hi - lo) / coarse, 1e-14)
            lo, hi = max(xs[i] - w, ps[0]), min(xs[i] + w, 1.0)
        return float(best ** 2)

    if d != 3:
        raise ValueError("grid oracle implemented for d <= 3")
    s1, s2 = ps[0], ps[0] + ps[1]
    lo1, hi1 = s1, 1.0
    lo2, hi2 = s2, 1.0
    best = -1.0
    for _ in range(zooms + 1):
        c1 = np.linspace(lo1, hi1, coarse)
        c2 = np.linspace(lo2, hi2, coarse)
        g1, g2 = np.meshgrid(c1, c2, indexing="ij")
        x0 = g1
        x1 = np.clip(g2 - g1, 0.0, None)
        x2 = np.clip(1.0 - g2, 0.0, None)
        v = (np.sqrt(x0 * ph[0]) + np.sqrt(x1 * ph[1]) + np.sqrt(x2 * ph[2]))
        v = np.where(g2 >= g1 - 1e-12, v, -1.0)
        i, j = np.unravel_index(int(np.argmax(v)), v.shape)
        best = max(best, float(v[i, j]))
        w1 = max((hi1 - lo1) / coarse * 2, 1e-14)
        w2 = max((hi2 - lo2) / coarse * 2, 1e-14)
        lo1, hi1 = max(c1[i] - w1, s1), min(c1[i] + w1, 1.0)
        lo2, hi2 = max(c2[j] - w2, s2), min(c2[j] + w2, 1.0)
    return float(best ** 2)


def check_bipartite_oracles(full: bool = False) -> List[CheckResult]:
    out = []
    grids = [(2, 0.05), (3, 0.1)] if full else [(2, 0.1), (3, 0.2)]
    n_pairs = 0
    nielsen_ok = True
    pmax_worst = 0.0
    faithful_worst = 0.0
    for d, step in grids:
        vecs = _simplex_grid(d, step)
        for a in vecs:
            for b in vecs:
                n_pairs += 1
                sa, sb = SchmidtVector(a), SchmidtVector(b)
                nielsen_ok &= (nielsen_convertible(sa, sb)
                               == _brute_partial_sums(a, b))
                pmax_worst = max(pmax_worst,
                                 abs(pmax_bipartite(sa, sb) - _brute_min_ratio(a, b)))
                f_impl, _ = optimal_faithful_fidelity(sa, sb, restarts=8)
                f_grid = faithful_grid_oracle(a, b)
                faithful_worst = max(faithful_worst, abs(f_impl - f_grid))
    out.append(CheckResult("bipartite.nielsen_brute_force", float(nielsen_ok),
                           1.0, 0.0, nielsen_ok, f"{n_pairs} pairs"))
    out.append(_close("bipartite.pmax_min_ratio", pmax_worst, 0.0, 1e-12,
                      f"{n_pairs} pairs"))
    out.append(_close("bipartite.faithful_vs_grid", faithful_worst, 0.0, 1e-6,
                      f"{n_pairs} pairs"))
    return out


# ---------------------------------------------------------------------------
# criterion 3: crossing of the OSBP average against the LU bracket


def _osbp_minus_upper(lam: float) -> float:
    p = fam.pmax_value(lam)
    return p + (1.0 - p) * fam.f0_value(lam) - fam.flu_upper(lam)


def lambda0_crossing() -> float:
    lo, hi = LAMBDA0_WINDOW
    if not (_osbp_minus_upper(lo) < 0 < _osbp_minus_upper(hi)):
        raise ArithmeticError("no sign change over the expected window")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _osbp_minus_upper(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def check_lambda0(cfg: Optional[OptimizerConfig] = None) -> List[CheckResult]:
    cfg = cfg or OptimizerConfig(restarts=10, max_iters=500)
    out = []
    lam0 = lambda0_crossing()
    out.append(CheckResult("lambda0.window", lam0, 0.5 * sum(LAMBDA0_WINDOW),
                           0.5 * (LAMBDA0_WINDOW[1] - LAMBDA0_WINDOW[0]),
                           LAMBDA0_WINDOW[0] <= lam0 <= LAMBDA0_WINDOW[1],
                           "crossing against the two-unitary upper bound"))
    out.append(_close("lambda0.regression", lam0, REG_LAMBDA0, 5e-3))

    seed = fam.seed_state()

    def against_lower(lam):
        rep = osbp_report(lam)
        lb, _ = lu_fidelity_lower(seed, fam.phi_state(lam), cfg)
        return rep.f_av - lb

    below, above = lam0 - 0.015, lam0 + 0.015
    bracket_ok = against_lower(below) < 0 and _osbp_minus_upper(above) > 0
    out.append(CheckResult("lambda0.bracket_consistency", float(bracket_ok),
                           1.0, 0.0, bracket_ok,
                           "below the multistart estimate before, above the "
                           "closed-form bound after"))
    lo, hi = below, above
    for _ in range(14):
        mid = 0.5 * (lo + hi)
        if against_lower(mid) > 0:
            hi = mid
        else:
            lo = mid
    lam_lb = 0.5 * (lo + hi)
    out.append(CheckResult("lambda0.lower_crossing_window", lam_lb,
                           0.5 * sum(LAMBDA0_WINDOW),
                           0.5 * (LAMBDA0_WINDOW[1] - LAMBDA0_WINDOW[0]),
                           LAMBDA0_WINDOW[0] <= lam_lb <= LAMBDA0_WINDOW[1]
                           and lam_lb <= lam0 + 5e-3,
                           "crossing against the multistart lower estimate"))
    return out


# ---------------------------------------------------------------------------
# criterion 4: protocol-fidelity separation over the scan grid


def check_fig6(cfg: Optional[OptimizerConfig] = None,
               grid: Optional[Sequence[float]] = None,
               tail_points: int = 100) -> List[CheckResult]:
    cfg = cfg or OptimizerConfig()
    out = []
    grid = list(grid) if grid is not None else [round(0.01 * i, 10)
                                                for i in range(1, 50)]
    worst_margin = np.inf
    worst_norm = 0.0
    prev_deficit = None
    monotone = True
    for lam in grid:
        rep, tree = run_sequential_protocol(lam, cfg)
        tree.check_invariants()
        worst_norm = max(worst_norm,
                         abs(sum(p for p, _ in tree.leaves()) - 1.0))
        margin = fam.deficit_bisep1(lam) - rep.deficit
        worst_margin = min(worst_margin, margin / fam.deficit_bisep1(lam))
        if lam >= 0.3:
            if prev_deficit is not None and rep.deficit > prev_deficit:
                monotone = False
            prev_deficit = rep.deficit
    out.append(CheckResult("fig6.grid_separation", worst_margin, 0.0, 0.0,
                           worst_margin > 0.0,
                           f"min relative deficit margin over {len(grid)} tilts"))
    out.append(_close("fig6.tree_normalization", worst_norm, 0.0, 1e-9,
                      "worst leaf-probability defect"))
    out.append(CheckResult("fig6.monotone_tail", float(monotone), 1.0, 0.0,
                           monotone, "protocol deficit decreasing for lam >= 0.3"))

    tail = np.linspace(0.49, 0.4999, tail_points)
    worst_tail = np.inf
    worst_triv = np.inf
    for lam in tail:
        rep, _ = run_sequential_protocol(float(lam), cfg)
        worst_tail = min(worst_tail,
                         (fam.deficit_bisep1(float(lam)) - rep.deficit)
                         / fam.deficit_bisep1(float(lam)))
        worst_triv = min(worst_triv,
                         (1.0 - fam.ftriv_upper(float(lam))) - rep.deficit)
    out.append(CheckResult("fig6.tail_separation", worst_tail, 0.0, 0.0,
                           worst_tail > 0.0,
                           f"min relative deficit margin, {tail_points} points "
                           "in [0.49, 0.4999]"))
    out.append(CheckResult("fig6.tail_beats_triv", worst_triv, 0.0, 0.0,
                           worst_triv > 0.0))
    out.append(_close("fig6.triv_right_edge", fam.ftriv_upper(0.4999),
                      7.0 / 8.0, 1e-3))
    return out


# ---------------------------------------------------------------------------
# criterion 7: property suites


def check_distance_sandwich(n_pairs: int = 500, seed: int = 23) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    dims = (2, 2, 2)
    worst = 0.0
    pure_gap = 0.0
    for i in range(n_pairs):
        kind = i % 3
        if kind == 0:
            a = random_density(dims, rng, rank=int(rng.integers(1, 9)))
            b = random_density(dims, rng, rank=int(rng.integers(1, 9)))
        elif kind == 1:
            a = random_state(dims, rng)
            b = random_density(dims, rng, rank=int(rng.integers(1, 9)))
        else:
            a = random_state(dims, rng)
            b = random_state(dims, rng)
        f = fidelity(a, b)
        d = trace_distance(a, b)
        worst = max(worst, (1.0 - sqrt(f)) - d, d - sqrt(1.0 - f))
        if kind == 1:
            worst = max(worst, (1.0 - f) - d)
        if kind == 2:
            pure_gap = max(pure_gap, abs(d - sqrt(1.0 - f)))
    out = [_close("sandwich.violation", worst, 0.0, 1e-9,
                  f"{n_pairs} random pairs, worst one-sided violation"),
           _close("sandwich.pure_pair_equality", pure_gap, 0.0, 1e-10)]
    return out


def _random_measurement(rng: np.random.Generator, singular: bool) -> LocalMeasurement:
    from .states import random_unitary
    d0 = rng.uniform(0.0, 1.0, 2)
    if singular:
        d0[int(rng.integers(0, 2))] = float(rng.integers(0, 2))  # hit 0 or 1
    v = random_unitary(2, rng)
    u0 = random_unitary(2, rng)
    u1 = random_unitary(2, rng)
    m0 = u0 @ v @ np.diag(np.sqrt(d0)) @ v.conj().T
    m1 = u1 @ v @ np.diag(np.sqrt(1.0 - d0)) @ v.conj().T
    return LocalMeasurement(m0, m1)


def check_chi_perturb(n_cases: int = 200, seed: int = 31) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_complete = 0.0
    worst_sv = np.inf
    worst_cont = 0.0
    unchanged_ok = True
    for i in range(n_cases):
        m = _random_measurement(rng, singular=(i % 2 == 0))
        chi = float(rng.uniform(1e-4, 1.0 - 1e-4))
        p = chi_perturb(m, chi)
        worst_complete = max(worst_complete, p.completeness_residual())
        worst_sv = min(worst_sv, min(p.min_singular_values()))
        tiny = chi_perturb(m, 1e-10)
        worst_cont = max(worst_cont,
                         float(np.max(np.abs(tiny.m0 - m.m0))),
                         float(np.max(np.abs(tiny.m1 - m.m1))))
        if min(m.min_singular_values()) > 1e-6:
            q = chi_perturb(m, 0.5)
            unchanged_ok &= np.array_equal(q.m0, m.m0) and np.array_equal(q.m1, m.m1)
    return [
        _close("chi.completeness", worst_complete, 0.0, 1e-10,
               f"{n_cases} random measurements"),
        CheckResult("chi.invertibility", worst_sv, 0.0, 0.0, worst_sv > 0.0,
                    "min output singular value"),
        _close("chi.continuity", worst_cont, 0.0, 1e-4,
               "operator change at chi = 1e-10"),
        CheckResult("chi.full_rank_unchanged", float(unchanged_ok), 1.0, 0.0,
                    unchanged_ok),
    ]


def check_ensemble_monotones(n_probes: int = 50, seed: int = 41) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    seed_state = fam.seed_state()
    dims = seed_state.local_dims
    # random probes plus the all-zero product, where the inequality is tight
    probes = [random_product_state(dims, rng) for _ in range(n_probes - 1)]
    probes.append(product_zero_state(5))
    worst = np.inf
    for lam in (0.1, 0.25, 0.4):
        src = SloccClassState(seed_state, LocalOperatorBundle.identity(dims))
        h = fam.tilt_bundle(lam)
        p = pmax_generic(src, h)
        leaves = [(p, SloccClassState(seed_state, h))]
        worst = min(worst, verify_ensemble_monotones(src, leaves, probes))
    for _ in range(5):  # random in-class ensembles via random invertible maps
        mats = [np.eye(2) + 0.4 * rng.standard_normal((2, 2)) for _ in range(5)]
        g = LocalOperatorBundle(mats)
        src = SloccClassState(seed_state, LocalOperatorBundle.identity(dims))
        tgt = SloccClassState(seed_state, g)
        p = pmax_generic(src, g)
        worst = min(worst, verify_ensemble_monotones(src, [(p, tgt)], probes))
    out = [CheckResult("monotones.protocol_slack", worst, 0.0, 1e-9,
                       worst >= -1e-9, f"worst probe slack, {n_probes} probes")]
    src = SloccClassState(seed_state, LocalOperatorBundle.identity(dims))
    h = fam.tilt_bundle(0.25)
    inflated = [(min(1.5 * pmax_generic(src, h) + 0.2, 1.0),
                 SloccClassState(seed_state, h))]
    bad = verify_ensemble_monotones(src, inflated, probes)
    out.append(CheckResult("monotones.violation_detected", bad, 0.0, 0.0,
                           bad < -1e-9, "inflated ensemble must fail"))
    return out


def check_lemma3(n_cases: int = 100, seed: int = 53) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    dims = (2, 2, 2)
    found = 0
    for _ in range(n_cases):
        psi = random_state(dims, rng)
        far = random_state(dims, rng)
        q1 = float(rng.uniform(0.9, 0.99))
        comps = [(q1, psi), (1.0 - q1, far)]
        outcomes = [[(1.0, st)] for _, st in comps]  # identity channel
        f_far = fidelity(far, psi)
        delta = (1.0 - (q1 + (1.0 - q1) * f_far)) * float(rng.uniform(1.05, 1.4)) + 1e-12
        eps = delta
        idx = lemma3_witness(comps, outcomes, psi, psi, delta, eps, 2.0, 2.0)
        if idx is not None:
            found += 1
    return [CheckResult("lemma3.witness_found", float(found), float(n_cases),
                        0.0, found == n_cases, f"{n_cases} constructed mixtures")]


def check_appendix_floor(n_cases: int = 10, seed: int = 61) -> List[CheckResult]:
    """Perturb the input, rerun the one-successful-branch split, and compare
    the ideal-input average fidelity against 1 - (sqrt(delta) + sqrt(eps))."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for i in range(n_cases):
        lam = float(rng.uniform(0.1, 0.45))
        eta = 10.0 ** rng.uniform(-4, -1.5)
        seed_state = fam.seed_state()
        noise = random_state(seed_state.local_dims, rng)
        amps = seed_state.amplitudes + eta * noise.amplitudes
        tilde = QuantumState(seed_state.local_dims, amps, normalized=False).unit()
        delta = max(pure_deficit(seed_state, tilde), 0.0)
        phi = fam.phi_state(lam)
        raw = apply_local(fam.tilt_bundle(lam), tilde)
        p_succ = min(raw.norm_sq / (0.5 + lam) ** 10, 1.0)
        f_av_tilde = (p_succ * fidelity(raw.unit(), phi)
                      + (1.0 - p_succ) * fidelity(product_zero_state(5), phi))
        eps = max(1.0 - f_av_tilde, 0.0)
        floor = 1.0 - (sqrt(delta) + sqrt(eps))
        worst = min(worst, osbp_report(lam).f_av - floor)
    return [CheckResult("appendix.fidelity_floor", worst, 0.0, 1e-9,
                        worst >= -1e-9,
                        f"{n_cases} perturbed inputs, worst slack")]


def check_salvage_regression(cfg: Optional[OptimizerConfig] = None) -> List[CheckResult]:
    from .optimize import optimize_salvage_branch
    from .protocols import _salvage_config
    base = cfg or OptimizerConfig()
    lam = 0.25
    bcfg = _salvage_config(base, lam, 1, fam.fail_prob(lam, 1))
    res = optimize_salvage_branch(fam.chi_state(lam, 1), fam.phi_state(lam),
                                  fam.f0_value(lam), bcfg,
                                  deficit_f0=fam.deficit_f0(lam))
    return [
        CheckResult("salvage.beats_dump", res.objective, fam.f0_value(lam),
                    0.0, res.objective > fam.f0_value(lam),
                    "party-1 branch at lam = 1/4"),
        _close("salvage.regression", res.objective, REG_SALVAGE_QUARTER, 1e-4),
    ]


# ---------------------------------------------------------------------------


def run_suite(suite: str = "fast",
              cfg: Optional[OptimizerConfig] = None) -> List[CheckResult]:
    if suite not in ("fast", "full"):
        raise ValueError("suite must be 'fast' or 'full'")
    full = suite == "full"
    cfg = cfg or OptimizerConfig()
    checks: List[CheckResult] = []
    checks += check_ghz_constants()
    checks += check_pmax_consistency(n_random=20 if full else 5)
    checks += check_nearest_product(full=full)
    checks += check_bipartite_oracles(full=full)
    checks += check_distance_sandwich(n_pairs=500 if full else 120)
    checks += check_chi_perturb(n_cases=200 if full else 60)
    checks += check_ensemble_monotones()
    checks += check_lemma3(n_cases=100 if full else 25)
    checks += check_appendix_floor(n_cases=10 if full else 4)
    if full:
        checks += check_salvage_regression(cfg)
        checks += check_lambda0()
        checks += check_fig6(cfg)
    return checks


def summary_json(checks: Sequence[CheckResult]) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "n_checks": len(checks),
        "n_failed": sum(not c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }

"""Closed-form bound suite: common-intermediate fidelity bounds,
biseparable maxima, the epsilon threshold, and distance-propagation
arithmetic for approximate transformations.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Tuple

import numpy as np

from .states import QuantumState, fidelity, reduced_density, spectrum


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    lower_kind: str = ""
    upper_kind: str = ""

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError("lower bound exceeds upper bound")
        for v in (self.lower, self.upper):
            if not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError("bounds must lie in [0, 1]")


def f_triv_bounds(psi: QuantumState, phi: QuantumState) -> BoundPair:
    """Bounds on the best fidelity reachable through a common intermediate
    state under local unitaries on either side.

    Lower: the plain fidelity.  Upper: 3/4 + (1/4)(sum_i sqrt(mu_i mu_i'))^2
    over the sorted single-site spectra of both states.
    """
    if psi.local_dims != phi.local_dims:
        raise ValueError("states must share dimensions")
    lower = fidelity(psi, phi)
    mu_a = np.clip(spectrum(reduced_density(psi.unit(), [0])), 0.0, None)
    mu_b = np.clip(spectrum(reduced_density(phi.unit(), [0])), 0.0, None)
    cross = float(np.sum(np.sqrt(mu_a * mu_b)) ** 2)
    upper = 0.75 + 0.25 * cross
    return BoundPair(lower=min(lower, upper), upper=min(upper, 1.0),
                     lower_kind="fidelity", upper_kind="two-unitary-chain")


def bisep_max_fidelity(phi: QuantumState, partition) -> float:
    """Largest fidelity of ``phi`` with a pure state that is product across
    the given bipartition: the top eigenvalue of the reduced state."""
    part = sorted(set(int(i) for i in partition))
    if not part or len(part) >= phi.n_sites:
        raise ValueError("partition must be a nonempty proper subset")
    return float(spectrum(reduced_density(phi.unit(), part))[0])


def epsilon_threshold(f_lu_upper: float) -> float:
    """Vicinity radius below which no local-unitary path connects the two
    neighborhoods: (1 - sqrt(1 + 4 s) + 2 s)/2 with s = sqrt(1 - F)."""
    if not 0.0 <= f_lu_upper < 1.0:
        raise ValueError("upper bound must lie in [0, 1)")
    s = sqrt(1.0 - f_lu_upper)
    return 0.5 * (1.0 - sqrt(1.0 + 4.0 * s) + 2.0 * s)


def approx_distance_bounds(d_psi_phi: float, delta: float, eps: float
                           ) -> Tuple[float, float]:
    """Propagation bounds for approximate inputs.

    Returns (distance bound D + sqrt(delta) clamped to 1,
             fidelity floor 1 - (sqrt(delta) + sqrt(eps)) clamped to 0).
    """
    for v in (d_psi_phi, delta, eps):
        if not 0.0 <= v <= 1.0:
            raise ValueError("inputs must lie in [0, 1]")
    dist = min(d_psi_phi + sqrt(delta), 1.0)
    floor = max(1.0 - (sqrt(delta) + sqrt(eps)), 0.0)
    return dist, floor

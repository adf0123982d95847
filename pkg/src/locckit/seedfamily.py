"""Closed forms for the five-qubit seed state and its tilted target family.

The family is phi(lam) ~ D_lam^{x5} |seed> with D_lam = diag(1/2+lam,
1/2-lam), lam in (0, 1/2).  Everything here is plain arithmetic over the
three weight sectors of the seed (weights 0, 3, 5), so all quantities stay
accurate in *deficit* form even where 1 - F underflows double precision
(deficits reach ~1e-24 at lam = 0.4999).
"""
from __future__ import annotations

from math import comb, sqrt

import numpy as np

from .slocc import LocalMeasurement
from .states import (LocalOperatorBundle, QuantumState, apply_local,
                     generic_seed_state, reduced_density, spectrum)

N_SITES = 5


def check_lambda(lam: float):
    if not 0.0 < lam < 0.5:
        raise ValueError("lambda must lie strictly between 0 and 1/2")


def tilt_matrix(lam: float) -> np.ndarray:
    return np.array([[0.5 + lam, 0.0], [0.0, 0.5 - lam]])


def tilt_bundle(lam: float, n: int = N_SITES) -> LocalOperatorBundle:
    return LocalOperatorBundle([tilt_matrix(lam)] * n)


def seed_state() -> QuantumState:
    return generic_seed_state()


def nsq(lam: float) -> float:
    """Squared norm of D_lam^{x5} applied to the seed."""
    p, q = 0.5 + lam, 0.5 - lam
    return (7 * p ** 10 + 10 * p ** 4 * q ** 6 + 5 * q ** 10) / 22.0


def phi_state(lam: float) -> QuantumState:
    """Normalized tilted target.  Amplitudes are positive products, so no
    cancellation occurs even at extreme lambda."""
    check_lambda(lam)
    raw = apply_local(tilt_bundle(lam), seed_state())
    return raw.unit()


def pmax_value(lam: float) -> float:
    """Optimal conversion probability seed -> phi(lam): n^2/(1/2+lam)^10."""
    check_lambda(lam)
    p = 0.5 + lam
    return min(nsq(lam) / p ** 10, 1.0)


def deficit_f0(lam: float) -> float:
    """1 - F(|00000>, phi(lam)) in stable closed form."""
    p, q = 0.5 + lam, 0.5 - lam
    return (10 * p ** 4 * q ** 6 + 5 * q ** 10) / (22.0 * nsq(lam))


def f0_value(lam: float) -> float:
    return 1.0 - deficit_f0(lam)


def site1_spectrum(lam: float):
    """Eigenvalues (descending) of the one-site reduction of phi(lam);
    the reduction is diagonal in the computational basis."""
    p, q = 0.5 + lam, 0.5 - lam
    n22 = 22.0 * nsq(lam)
    a = (7 * p ** 10 + 4 * p ** 4 * q ** 6) / n22
    b = (5 * q ** 10 + 6 * p ** 4 * q ** 6) / n22
    return (a, b) if a >= b else (b, a)


def deficit_bisep1(lam: float) -> float:
    """1 - mu_max(rho_1(lam)), stable at extreme lambda."""
    p, q = 0.5 + lam, 0.5 - lam
    n22 = 22.0 * nsq(lam)
    a = (7 * p ** 10 + 4 * p ** 4 * q ** 6) / n22
    b = (5 * q ** 10 + 6 * p ** 4 * q ** 6) / n22
    return min(a, b)


def bisep1_value(lam: float) -> float:
    return max(site1_spectrum(lam))


def bisep12_value(lam: float) -> float:
    """mu_max of the two-site reduction of phi(lam)."""
    rho = reduced_density(phi_state(lam), [0, 1])
    return float(spectrum(rho)[0])


def flu_upper(lam: float) -> float:
    """Two-unitary upper bound on the local-unitary fidelity seed vs
    phi(lam): (1/2)(sqrt(mu_0) + sqrt(mu_1))^2 = (1 + 2 sqrt(mu_0 mu_1))/2."""
    a, b = site1_spectrum(lam)
    return 0.5 * (1.0 + 2.0 * sqrt(a * b))


def ftriv_upper(lam: float) -> float:
    """Upper bound on the best common-intermediate fidelity for the seed
    (critical, so the general bound reduces to 3/4 + (1/8)(sum sqrt mu)^2)."""
    a, b = site1_spectrum(lam)
    return 0.75 + (1.0 + 2.0 * sqrt(a * b)) / 8.0


def overlap(lam: float) -> float:
    """|<seed|phi(lam)>|^2."""
    p, q = 0.5 + lam, 0.5 - lam
    ip = (7 * p ** 5 + 10 * p ** 2 * q ** 3 + 5 * q ** 5) / 22.0
    return ip * ip / nsq(lam)


def measurement(lam: float) -> LocalMeasurement:
    """Per-party two-outcome measurement of the sequential protocol:
    M0 = D_lam/(1/2+lam), M1 = sqrt(1 - M0+M0) ~ |1><1|."""
    check_lambda(lam)
    p = 0.5 + lam
    m0 = tilt_matrix(lam) / p
    ratio = (0.5 - lam) / p
    m1 = np.array([[0.0, 0.0], [0.0, sqrt(max(1.0 - ratio * ratio, 0.0))]])
    return LocalMeasurement(m0, m1)


def prefix_success(lam: float, k: int) -> float:
    """Probability that parties 1..k all obtain the successful outcome."""
    if k == 0:
        return 1.0
    p, q = 0.5 + lam, 0.5 - lam
    p2, q2 = p * p, q * q
    tot = 7.0 * p2 ** k + 5.0 * q2 ** k
    for j in range(0, 4):  # weight-3 strings with j ones among the first k
        if j > k or 3 - j > 5 - k:
            continue
        tot += comb(k, j) * comb(5 - k, 3 - j) * p2 ** (k - j) * q2 ** j
    return tot / (22.0 * p2 ** k)


def fail_prob(lam: float, k: int) -> float:
    """Probability that the first unsuccessful outcome occurs at party k."""
    if not 1 <= k <= N_SITES:
        raise ValueError("party index must be in 1..5")
    return prefix_success(lam, k - 1) - prefix_success(lam, k)


def chi_tilde(k: int) -> QuantumState:
    """Untilted post-failure state: the seed projected on |1> at site k,
    i.e. |1>_k (x) (sqrt(5/11)|1111> + sqrt(6/11)|D_{4,2}>) on the rest."""
    if not 1 <= k <= N_SITES:
        raise ValueError("party index must be in 1..5")
    amps = np.array(seed_state().amplitudes)
    bit = N_SITES - k  # site k occupies bit (5 - k) of the flat index
    for idx in range(amps.size):
        if not (idx >> bit) & 1:
            amps[idx] = 0.0
    return QuantumState((2,) * N_SITES, amps, normalized=False).unit()


def chi_state(lam: float, k: int) -> QuantumState:
    """Post-failure state at party k: D^{x(k-1)} (x) 1 applied to chi_tilde."""
    check_lambda(lam)
    ops = [tilt_matrix(lam) if s < k - 1 else np.eye(2) for s in range(N_SITES)]
    raw = apply_local(LocalOperatorBundle(ops), chi_tilde(k))
    return raw.unit()

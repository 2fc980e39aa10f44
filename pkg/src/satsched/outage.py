"""Outage probability under statistical CSI.

With only channel statistics at hand the scheduler fixes a decode order
v_1..v_K by exponential SNR rates lambda (strongest mean first, so
ascending lambda).  The last decoded user v_K fails whenever any slot of
the phase-1 SINR chain breaks, and the whole two-hop transmission fails if
additionally the satellite hop cannot carry K*r_target.

Phase-1 success has a closed form built from the recursion

    A_1 = 1, B_1 = lambda_1,
    A_k = lambda_k * A_{k-1} / (gamma*B_{k-1} + lambda_k),
    B_k = (1+gamma)*B_{k-1} + lambda_k,

    P_success = lambda_K * A_{K-1} / (gamma*B_{K-1} + lambda_K)
                * exp(-gamma*((1+gamma)*B_{K-1} + lambda_K)).

Phase-2 outage is the shadowed-Rician CDF at 2**(K*r_target) - 1, evaluated
as a power series whose n-th term couples the Pochhammer coefficient with a
regularized lower incomplete gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from scipy import special

from .channel import SrParams, sample_sr_snr
from .errors import NumericError, ParameterError

_LN2 = math.log(2.0)
_PHASE2_RTOL = 1e-12
_PHASE2_MAX_TERMS = 1000


@dataclass(frozen=True)
class GroupCdi:
    """Statistical CSI for M user groups: exponential SNR rates and group
    head counts (sizes are bookkeeping only; scheduling works on rates)."""

    lambdas: np.ndarray
    group_sizes: np.ndarray | None = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ParameterError("lambdas must be a non-empty 1-D array")
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ParameterError("lambdas must be positive finite")
        object.__setattr__(self, "lambdas", lam)
        if self.group_sizes is None:
            object.__setattr__(self, "group_sizes", np.ones(lam.size, dtype=int))
        else:
            sizes = np.asarray(self.group_sizes, dtype=int)
            if sizes.shape != lam.shape or np.any(sizes < 1):
                raise ParameterError("group_sizes must match lambdas and be >= 1")
            object.__setattr__(self, "group_sizes", sizes)

    @property
    def n_groups(self) -> int:
        return int(self.lambdas.size)

    @classmethod
    def from_sigma_sq(cls, sigma_sqs, tx_power: float) -> "GroupCdi":
        sig = np.asarray(sigma_sqs, dtype=float)
        if np.any(sig <= 0):
            raise ParameterError("sigma_sqs must be positive")
        return cls(lambdas=1.0 / (2.0 * tx_power * sig))


@dataclass(frozen=True)
class McStats:
    trials: int
    std_error: float
    p1_std_error: float
    p2_std_error: float
    workers: int


@dataclass(frozen=True)
class OutageReport:
    p1: float
    p2: float
    total: float
    method: str  # "closed_form" or "monte_carlo"
    mc_stats: McStats | None = None
    per_user_p1: tuple | None = None


def _check_lambdas(lambdas_in_order) -> np.ndarray:
    lam = np.asarray(lambdas_in_order, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ParameterError("lambdas_in_order must be a non-empty 1-D array")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ParameterError("lambdas must be positive finite")
    return lam


def _check_gamma(gamma_t: float) -> float:
    if not (gamma_t >= 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be non-negative finite, got {gamma_t}")
    return float(gamma_t)


def phase1_outage(lambdas_in_order: np.ndarray, gamma_t: float) -> float:
    """Outage of the last decoded user over the relay SINR chain.

    Evaluated in log space and returned through expm1, so tiny outages and
    long chains both stay at machine precision.
    """
    lam = _check_lambdas(lambdas_in_order)
    gamma_t = _check_gamma(gamma_t)
    if lam.size == 1:
        return -math.expm1(-float(lam[0]) * gamma_t)
    b = float(lam[0])
    log_success = 0.0
    for k in range(1, lam.size):
        lk = float(lam[k])
        log_success += math.log(lk) - math.log(gamma_t * b + lk)
        if k < lam.size - 1:
            b = (1.0 + gamma_t) * b + lk
    log_success -= gamma_t * ((1.0 + gamma_t) * b + float(lam[-1]))
    return -math.expm1(log_success)


def phase2_outage(sr: SrParams, k_users: int, r_target: float) -> float:
    """Probability the satellite hop cannot carry k_users * r_target."""
    if k_users < 1:
        raise ParameterError(f"k_users must be >= 1, got {k_users}")
    if not (r_target >= 0 and math.isfinite(r_target)):
        raise ParameterError(f"r_target must be non-negative finite, got {r_target}")
    threshold = np.expm1(k_users * r_target * _LN2)
    if threshold == 0.0:
        return 0.0
    x0 = float(threshold) / (2.0 * sr.b0 * sr.tx_power)
    denom = 2.0 * sr.b0 * sr.m_s + sr.omega
    z = sr.omega / denom
    pref = (2.0 * sr.b0 * sr.m_s / denom) ** sr.m_s
    coeff = 1.0  # (m_s)_n z^n / n!
    acc = float(special.gammainc(1.0, x0))
    for n in range(1, _PHASE2_MAX_TERMS):
        coeff *= (sr.m_s + n - 1.0) * z / n
        term = coeff * float(special.gammainc(n + 1.0, x0))
        acc += term
        # geometric tail bound: the coefficient ratio is monotone toward z,
        # so its supremum over the tail is max(current ratio, z), and the
        # gammainc factors only shrink
        ratio = max((sr.m_s + n) * z / (n + 1.0), z)
        if ratio < 1.0 and coeff * ratio / (1.0 - ratio) <= _PHASE2_RTOL * acc:
            return min(1.0, pref * acc)
    raise NumericError(
        "phase-2 series did not converge: z=%r x0=%r after %d terms"
        % (z, x0, _PHASE2_MAX_TERMS)
    )


def total_outage(p1: float, p2: float) -> float:
    """Failure of either independent hop: 1 - (1-p1)(1-p2)."""
    for name, p in (("p1", p1), ("p2", p2)):
        if not (0.0 <= p <= 1.0):
            raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p1 + p2 - p1 * p2


def closed_form_report(lambdas_in_order, sr: SrParams | None, k_users: int,
                       r_target: float) -> OutageReport:
    """Convenience wrapper composing both phases; sr=None models an ideal
    satellite hop (no phase-2 outage)."""
    gamma_t = math.expm1(r_target * _LN2)
    p1 = phase1_outage(lambdas_in_order, gamma_t)
    p2 = phase2_outage(sr, k_users, r_target) if sr is not None else 0.0
    return OutageReport(p1=p1, p2=p2, total=total_outage(p1, p2), method="closed_form")


def monte_carlo_outage(lambdas_in_order, sr: SrParams | None, r_target: float,
                       trials: int, rng: Generator, *, workers: int = 1) -> OutageReport:
    """Empirical outage over seeded trials.

    Per trial, user SNRs are exponential with the given rates and the
    satellite SNR is shadowed-Rician (sr=None forces the satellite hop
    perfect).  Trials are split across `workers` generators spawned from
    rng, and counts are summed, so the estimate is reproducible given the
    master seed and worker count regardless of chunk execution order.

    per_user_p1[k] is the frequency of the truncated chain event for decode
    slot k: any of the first k+1 slots failing when interference is summed
    only over slots up to k.  The last entry is the full-chain phase-1
    outage and is non-decreasing in k by event nesting.
    """
    lam = _check_lambdas(lambdas_in_order)
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    gamma_t = _check_gamma(math.expm1(r_target * _LN2))
    k = lam.size
    threshold2 = float(np.expm1(k * r_target * _LN2))

    chunk_sizes = [trials // workers] * workers
    for i in range(trials % workers):
        chunk_sizes[i] += 1
    streams = rng.spawn(workers) if workers > 1 else [rng]

    per_user_fail = np.zeros(k, dtype=np.int64)
    p2_fail = 0
    total_fail = 0
    for stream, size in zip(streams, chunk_sizes):
        if size == 0:
            continue
        snrs = stream.exponential(scale=1.0 / lam, size=(size, k))
        cum = np.cumsum(snrs, axis=1)
        # slot_ok[:, j, m]: slot j clears its threshold in the chain
        # truncated at slot m (interference from slots j+1..m only)
        fail_through = np.zeros(size, dtype=bool)
        for m in range(k):
            ok_m = np.ones(size, dtype=bool)
            for j in range(m + 1):
                interference = cum[:, m] - cum[:, j]
                ok_m &= snrs[:, j] >= gamma_t * (interference + 1.0)
            fail_through = ~ok_m
            per_user_fail[m] += int(np.count_nonzero(fail_through))
        phase1_fail = fail_through  # full chain, m = k-1
        if sr is not None:
            sat = sample_sr_snr(sr, size, stream)
            phase2_fail_mask = sat < threshold2
        else:
            phase2_fail_mask = np.zeros(size, dtype=bool)
        p2_fail += int(np.count_nonzero(phase2_fail_mask))
        total_fail += int(np.count_nonzero(phase1_fail | phase2_fail_mask))

    per_user_p1 = per_user_fail / trials
    p1 = float(per_user_p1[-1])
    p2 = p2_fail / trials
    total = total_fail / trials

    def se(p):
        return math.sqrt(max(p * (1.0 - p), 0.0) / trials)

    return OutageReport(
        p1=p1,
        p2=float(p2),
        total=float(total),
        method="monte_carlo",
        mc_stats=McStats(trials=trials, std_error=se(total),
                         p1_std_error=se(p1), p2_std_error=se(p2), workers=workers),
        per_user_p1=tuple(float(x) for x in per_user_p1),
    )

"""Feasibility test and sum-rate sandwich for terrestrial user selection.

The building block is phi(a, S): the smallest pool element >= a, i.e. the
cheapest SNR that can absorb a decode threshold.  Running phi from the last
decode slot backwards yields the economy selection S_hat: the K cheapest
SNRs that could possibly close the SINR chain.  The instance supports K
users exactly when that recursion completes, and the best selection's SNR
profile is sandwiched between the economy selection (with the strongest
user substituted into slot 1) and a geometric profile anchored at the
strongest SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import CsiRealization
from .errors import ParameterError
from .rate_core import awgn_capacity, sinr_threshold


@dataclass(frozen=True)
class BoundsResult:
    lb_snrs: tuple | None
    ub_snrs: tuple
    lb_rate: float
    ub_rate: float
    feasible: bool


def phi(threshold: float, pool) -> float | None:
    """Smallest element of pool that is >= threshold, or None."""
    arr = np.asarray(pool, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError("pool must be a non-empty 1-D collection")
    if math.isnan(threshold):
        raise ParameterError("threshold must not be NaN")
    eligible = arr[arr >= threshold]
    if eligible.size == 0:
        return None
    return float(eligible.min())


def _check_selection_args(snrs, k: int, gamma_t: float) -> np.ndarray:
    s = np.asarray(snrs, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ParameterError("snrs must be a non-empty 1-D array")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ParameterError("SNRs must be finite and non-negative")
    if not (1 <= k <= s.size):
        raise ParameterError(f"k must be in [1, {s.size}], got {k}")
    if not (gamma_t > 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be positive finite, got {gamma_t}")
    return s


def _economy_recursion(s: np.ndarray, k: int, gamma_t: float):
    """Fill decode slots K..1 with the cheapest admissible SNRs.

    Returns the slot values in decode order, or None as soon as some slot
    has no admissible element left.  Slot thresholds gamma*(tail+1) grow
    with every pick, so elements once below threshold stay inadmissible
    and one left-to-right sweep of the ascending SNR list fills all slots.
    """
    asc = np.sort(s).tolist()
    hat = [0.0] * k
    tail_sum = 0.0
    i = 0
    n = len(asc)
    for slot in range(k - 1, -1, -1):
        threshold = gamma_t * (tail_sum + 1.0)
        while i < n and asc[i] < threshold:
            i += 1
        if i == n:
            return None
        pick = asc[i]
        i += 1
        hat[slot] = pick
        tail_sum += pick
    return hat


def lower_bound_snrs(snrs, k: int, gamma_t: float):
    """Economy slot profile with the strongest SNR substituted into slot 1.

    None when the instance cannot support k users at gamma_t.
    """
    s = _check_selection_args(snrs, k, gamma_t)
    hat = _economy_recursion(s, k, gamma_t)
    if hat is None:
        return None
    hat[0] = float(s.max())
    return np.array(hat)


def upper_bound_snrs(s_max: float, k: int, gamma_t: float) -> np.ndarray:
    """Geometric SNR profile anchored at the strongest user.

    Slot j < K gets s_max/(1+gamma_t)**(j-1); the final slot gets
    s_max/((1+gamma_t)**(K-2) * gamma_t) - 1, which can go negative for
    large K and is reported as-is (callers clamp at zero when summing).
    """
    if not (s_max >= 0 and math.isfinite(s_max)):
        raise ParameterError(f"s_max must be non-negative finite, got {s_max}")
    if not (gamma_t > 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be positive finite, got {gamma_t}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k == 1:
        return np.array([s_max])
    out = s_max / np.power(1.0 + gamma_t, np.arange(k, dtype=float))
    out[k - 1] = s_max / ((1.0 + gamma_t) ** (k - 2) * gamma_t) - 1.0
    return out


def feasibility_check(snrs, k: int, gamma_t: float) -> bool:
    """True when some k-user selection closes the full SINR chain.

    Equivalent to the economy recursion completing: a slot's phi success
    already implies its threshold is at most the strongest SNR, and a slot
    with no admissible element cannot be filled by any selection.
    """
    s = _check_selection_args(snrs, k, gamma_t)
    return _economy_recursion(s, k, gamma_t) is not None


def sum_rate_bounds(csi: CsiRealization, k: int, r_target: float) -> BoundsResult:
    """Sandwich on the best achievable sum rate for k scheduled users.

    Both bounds are capped by the satellite cut-set C(sat_snr).  On an
    infeasible instance lb_snrs is None and lb_rate is 0.
    """
    gamma_t = sinr_threshold(r_target)
    if gamma_t == 0.0:
        raise ParameterError("r_target must be positive")
    s = _check_selection_args(csi.user_snrs, k, gamma_t)
    sat_cap = awgn_capacity(csi.sat_snr)

    lb = lower_bound_snrs(s, k, gamma_t)
    feasible = lb is not None
    lb_rate = min(awgn_capacity(float(lb.sum())), sat_cap) if feasible else 0.0

    ub = upper_bound_snrs(float(s.max()), k, gamma_t)
    ub_rate = min(awgn_capacity(float(np.clip(ub, 0.0, None).sum())), sat_cap)

    return BoundsResult(
        lb_snrs=tuple(lb) if feasible else None,
        ub_snrs=tuple(ub),
        lb_rate=lb_rate,
        ub_rate=ub_rate,
        feasible=feasible,
    )

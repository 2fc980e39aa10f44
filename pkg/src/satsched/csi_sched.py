"""User selection under instantaneous CSI.

All schedulers select K users for superposed phase-1 transmission, ordered
by descending SNR at the relay, such that every decode slot clears the SINR
threshold gamma_t = 2**r_target - 1, and try to maximize the scheduled SNR
sum (hence the sum rate).

gius: greedy windowed depth-first search.  Slot budgets T_k track how much
SNR the remaining chain can still absorb; each slot picks the largest SNR
inside a window that provably cannot exclude all completions, backtracking
on dead ends.

lbus: low-complexity selection seeded by the economy profile.  The first
slot is pinned to the strongest user, candidate SNRs for the final slot are
scanned strongest-first inside their admissible interval, and middle slots
K-1..2 take the cheapest SNR that still closes the chain.

exhaustive: enumerate all K-subsets (descending order within a subset) and
keep the feasible one with the largest SNR sum.

baseline_tdma / baseline_opportunistic: orthogonal and single-user
references.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .channel import CsiRealization
from .csi_bounds import _economy_recursion, feasibility_check
from .errors import EnumerationBudgetError, InternalConsistencyError, ParameterError
from .rate_core import (
    RateReport,
    Schedule,
    awgn_capacity,
    empty_rate_report,
    evaluate_schedule,
    max_supported_users,
    sinr_threshold,
    throughput_power_split,
)


@dataclass(frozen=True)
class SchedulerStats:
    candidates_examined: int
    backtracks: int
    elapsed_ns: int


@dataclass(frozen=True)
class SchedulerOutcome:
    schedule: Schedule | None
    rate_report: RateReport
    stats: SchedulerStats

    @property
    def feasible(self) -> bool:
        return self.schedule is not None


def determine_k(csi: CsiRealization, r_target: float) -> int:
    """Largest user count supported by both hops, 0 when even one user
    cannot be served."""
    gamma_t = sinr_threshold(r_target)
    if gamma_t == 0.0:
        raise ParameterError("r_target must be positive")
    upper = max_supported_users(csi.sat_snr, r_target, csi.n_users)
    for k in range(upper, 0, -1):
        if feasibility_check(csi.user_snrs, k, gamma_t):
            return k
    return 0


def _descending_order(snrs: np.ndarray) -> np.ndarray:
    # stable sort so equal SNRs keep ascending index order
    return np.argsort(-snrs, kind="stable")


def _finish(users, csi, k, r_target, candidates, backtracks, t0) -> SchedulerOutcome:
    alphas = throughput_power_split(csi.user_snrs[list(users)], r_target, csi.sat_snr)
    if alphas is None:
        raise InternalConsistencyError("satellite hop cannot carry a selected schedule")
    schedule = Schedule(users=tuple(users), alphas=tuple(alphas))
    report = evaluate_schedule(schedule, csi, r_target)
    return SchedulerOutcome(
        schedule=schedule,
        rate_report=report,
        stats=SchedulerStats(candidates_examined=candidates, backtracks=backtracks,
                             elapsed_ns=time.perf_counter_ns() - t0),
    )


def _infeasible(csi, candidates, backtracks, t0) -> SchedulerOutcome:
    return SchedulerOutcome(
        schedule=None,
        rate_report=empty_rate_report(csi.sat_snr),
        stats=SchedulerStats(candidates_examined=candidates, backtracks=backtracks,
                             elapsed_ns=time.perf_counter_ns() - t0),
    )


def _entry_checks(csi: CsiRealization, k: int, r_target: float) -> float:
    if not (1 <= k <= csi.n_users):
        raise ParameterError(f"k must be in [1, {csi.n_users}], got {k}")
    gamma_t = sinr_threshold(r_target)
    if gamma_t == 0.0:
        raise ParameterError("r_target must be positive")
    return gamma_t


def gius(csi: CsiRealization, k: int, r_target: float) -> SchedulerOutcome:
    """Greedy windowed selection with backtracking.

    Callers obtain k from determine_k, so a full exhaustion of the first
    slot means the preconditions were violated and raises.  Slot k's budget
    is T_k = min(T_{k-1} - S_pick, S_pick/gamma_t); a completed chain is
    feasible iff T_K >= 1.  The admission window at slot k keeps S_i <=
    min(T_{k-1} - 1 - L_min(K-k), previous pick), where L_min(n) is the sum
    of the n globally smallest SNRs: anything larger starves the cheapest
    possible completion, so the window never discards all completions and
    the search is exact for feasibility.
    """
    t0 = time.perf_counter_ns()
    gamma_t = _entry_checks(csi, k, r_target)
    s = csi.user_snrs
    if max_supported_users(csi.sat_snr, r_target, k) < k:
        return _infeasible(csi, 0, 0, t0)

    order = _descending_order(s)
    asc = np.sort(s)
    # lmin[n] = sum of the n smallest SNRs
    lmin = np.concatenate([[0.0], np.cumsum(asc)])
    s_min = float(asc[0])
    candidates = 0
    backtracks = 0
    chosen: list[int] = []

    def search(depth: int, available: np.ndarray, t_prev: float) -> bool:
        nonlocal candidates, backtracks
        if depth > k:
            return True
        lower = gamma_t if depth == k else s_min
        if depth == 1:
            upper = math.inf
        else:
            upper = min(t_prev - 1.0 - float(lmin[k - depth]), s[chosen[-1]])
        window = [u for u in order if available[u] and lower <= s[u] <= upper]
        candidates += len(window)
        for u in window:
            s_u = float(s[u])
            t_here = s_u / gamma_t if depth == 1 else min(t_prev - s_u, s_u / gamma_t)
            chosen.append(u)
            available[u] = False
            if search(depth + 1, available, t_here):
                return True
            available[u] = True
            chosen.pop()
            backtracks += 1
        return False

    if not search(1, np.ones(s.size, dtype=bool), math.inf):
        raise InternalConsistencyError(
            "first-slot candidates exhausted although k came from determine_k"
        )
    return _finish(chosen, csi, k, r_target, candidates, backtracks, t0)


def lbus(csi: CsiRealization, k: int, r_target: float) -> SchedulerOutcome:
    """Economy-seeded low-complexity selection.

    Infeasibility is a value here (schedule None), not an error.
    """
    t0 = time.perf_counter_ns()
    gamma_t = _entry_checks(csi, k, r_target)
    s = csi.user_snrs
    if max_supported_users(csi.sat_snr, r_target, k) < k:
        return _infeasible(csi, 0, 0, t0)

    order = _descending_order(s).tolist()
    first = order[0]
    s_max = float(s[first])
    candidates = 0

    if k == 1:
        if s_max < gamma_t:
            return _infeasible(csi, 0, 0, t0)
        return _finish([first], csi, 1, r_target, 1, 0, t0)

    # economy recursion; only its last slot seeds the scan window
    lb = _economy_recursion(s, k, gamma_t)
    if lb is None:
        return _infeasible(csi, 0, 0, t0)
    last_low = lb[-1]
    last_high = s_max / ((1.0 + gamma_t) ** (k - 2) * gamma_t) - 1.0

    # strongest-first scan over admissible final-slot SNRs
    s_list = s.tolist()
    pool = order[1:]
    finals = [u for u in pool if last_low <= s_list[u] <= last_high]
    candidates += len(finals)
    asc_pool = sorted(((s_list[u], u) for u in pool))
    n_pool = len(asc_pool)
    for u_last in finals:
        # middle thresholds only grow along the back-to-front fill, so one
        # ascending sweep with a moving pointer covers all slots
        chosen = [u_last]
        tail_sum = s_list[u_last]
        last_pick = s_list[u_last]
        i = 0
        ok = True
        for _slot in range(k - 1, 1, -1):
            threshold = max(gamma_t * (tail_sum + 1.0), last_pick)
            while i < n_pool and (asc_pool[i][0] < threshold or asc_pool[i][1] == u_last):
                i += 1
            candidates += 1
            if i == n_pool:
                ok = False
                break
            last_pick, pick = asc_pool[i]
            i += 1
            chosen.append(pick)
            tail_sum += last_pick
        # the first slot's chain constraint is not guaranteed by
        # construction, so verify before accepting
        if ok and s_max >= gamma_t * (tail_sum + 1.0):
            chosen.reverse()
            return _finish([first] + chosen, csi, k, r_target, candidates, 0, t0)
    return _infeasible(csi, candidates, 0, t0)


def exhaustive(csi: CsiRealization, k: int, r_target: float, *,
               max_subsets: int = 2_000_000) -> SchedulerOutcome:
    """Enumerate every K-subset in descending-SNR order and keep the
    feasible one with the largest SNR sum.  Raises EnumerationBudgetError
    when comb(N, K) exceeds max_subsets."""
    import itertools

    t0 = time.perf_counter_ns()
    gamma_t = _entry_checks(csi, k, r_target)
    s = csi.user_snrs
    n_subsets = math.comb(csi.n_users, k)
    if n_subsets > max_subsets:
        raise EnumerationBudgetError(
            f"comb({csi.n_users}, {k}) = {n_subsets} exceeds budget {max_subsets}"
        )
    if max_supported_users(csi.sat_snr, r_target, k) < k:
        return _infeasible(csi, n_subsets, 0, t0)

    order = _descending_order(s)
    # combinations of a descending list are themselves descending
    combos = np.array(list(itertools.combinations(order.tolist(), k)), dtype=int)
    vals = s[combos]
    tail = np.concatenate(
        [np.cumsum(vals[:, ::-1], axis=1)[:, ::-1][:, 1:], np.zeros((vals.shape[0], 1))],
        axis=1,
    )
    feasible = np.all(vals >= gamma_t * (tail + 1.0), axis=1)
    if not feasible.any():
        return _infeasible(csi, n_subsets, 0, t0)
    sums = np.where(feasible, vals.sum(axis=1), -np.inf)
    best = int(np.argmax(sums))
    return _finish(combos[best].tolist(), csi, k, r_target, n_subsets, 0, t0)


def baseline_tdma(csi: CsiRealization, k: int, r_target: float) -> SchedulerOutcome:
    """Orthogonal reference: top-k users get equal slot shares, weakest
    users dropped until everyone meets r_target in their share."""
    t0 = time.perf_counter_ns()
    _entry_checks(csi, k, r_target)
    s = csi.user_snrs
    order = _descending_order(s)
    kept = [int(u) for u in order[:k]]
    while kept:
        share = 1.0 / len(kept)
        rates = [share * awgn_capacity(float(s[u])) for u in kept]
        if rates[-1] >= r_target:
            sat_cap = awgn_capacity(csi.sat_snr)
            sum_rate = min(float(sum(rates)), sat_cap)
            report = RateReport(
                per_user_rates=tuple(rates),
                sum_rate=sum_rate,
                binding_hop="terrestrial" if float(sum(rates)) <= sat_cap else "satellite",
                meets_target=True,
            )
            schedule = Schedule(users=tuple(kept), alphas=None)
            return SchedulerOutcome(
                schedule=schedule,
                rate_report=report,
                stats=SchedulerStats(len(kept), 0, time.perf_counter_ns() - t0),
            )
        kept.pop()  # weakest is last in descending order
    return _infeasible(csi, 0, 0, t0)


def baseline_opportunistic(csi: CsiRealization, r_target: float) -> SchedulerOutcome:
    """Single-user reference: schedule only the strongest user."""
    t0 = time.perf_counter_ns()
    gamma_t = sinr_threshold(r_target)
    if gamma_t == 0.0:
        raise ParameterError("r_target must be positive")
    s = csi.user_snrs
    best = int(_descending_order(s)[0])
    rate = min(awgn_capacity(float(s[best])), awgn_capacity(csi.sat_snr))
    if rate < r_target:
        return _infeasible(csi, 1, 0, t0)
    schedule = Schedule(users=(best,), alphas=(1.0,))
    report = evaluate_schedule(schedule, csi, r_target)
    return SchedulerOutcome(
        schedule=schedule,
        rate_report=report,
        stats=SchedulerStats(1, 0, time.perf_counter_ns() - t0),
    )

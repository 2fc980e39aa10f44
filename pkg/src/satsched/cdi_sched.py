"""Group selection under statistical CSI: minimize the last decoded user's
phase-1 outage over which K of the M groups transmit.

The continuous relaxation (rates free above lambda_min) has a unique
stationary profile characterized coordinate-wise: slot 1 takes lambda_min,
the last slot has a closed-form optimum in the accumulated B prefix, and
every middle slot k solves h(lambda) = 0 with

    h(lambda) = 1/lambda - sum_{i in [k..K]} 1/(lambda + D_{k,i})
                - gamma*(1+gamma)**(K-k),

where the D values collect the influence of the other slots and do not
depend on slot k's own rate.  h falls from +inf at 0+ to a negative limit
and crosses zero once, so bisection is exact.  solve_theorem3 iterates
coordinate updates to that stationary profile; aoius runs the same
coordinate moves over the discrete group rates, picking per slot the best
of the two groups bracketing the continuous optimum, which makes every
update, and hence the whole outage trace, monotone non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, default_rng

from .errors import EnumerationBudgetError, NumericError, ParameterError
from .outage import GroupCdi, phase1_outage

_BISECT_MAX_ITERS = 500
_BRACKET_MAX_DOUBLINGS = 400


@dataclass(frozen=True)
class CoordinateContext:
    """Everything h needs for one middle slot: the SINR threshold, the slot
    position (1-based, in [2, K-1]), the slot count, and the D values for
    i = position..K."""

    gamma_t: float
    position: int
    n_selected: int
    d_values: tuple

    def __post_init__(self):
        if not (2 <= self.position <= self.n_selected - 1):
            raise ParameterError(
                f"position must be in [2, {self.n_selected - 1}], got {self.position}"
            )
        if len(self.d_values) != self.n_selected - self.position + 1:
            raise ParameterError("one D value per slot in [position, n_selected] required")
        if any(d <= 0 or not math.isfinite(d) for d in self.d_values):
            raise ParameterError("D values must be positive finite")
        if not (self.gamma_t > 0 and math.isfinite(self.gamma_t)):
            raise ParameterError(f"gamma_t must be positive finite, got {self.gamma_t}")


def coordinate_context(lambdas_in_order, position: int, gamma_t: float) -> CoordinateContext:
    """Build the middle-slot context from a selected rate profile.

    The profile entry at `position` itself is ignored: its analytic
    contribution to every D cancels, so the D values are computed from the
    other slots only and the context is exactly independent of the
    coordinate being optimized.
    """
    lam = np.asarray(lambdas_in_order, dtype=float)
    if lam.ndim != 1 or lam.size < 3:
        raise ParameterError("need at least 3 slots for a middle coordinate")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ParameterError("lambdas must be positive finite")
    k = lam.size
    if not (2 <= position <= k - 1):
        raise ParameterError(f"position must be in [2, {k - 1}], got {position}")
    g = float(gamma_t)
    p = position - 1  # 0-based slot of the coordinate

    # weighted prefix sums skipping slot p: for target slot i (0-based),
    # B~_{i} = sum_{j <= i, j != p} (1+g)^(i-j) * lam_j
    ds = []
    # i = position (D_{k,k}): gamma * B_{k-1} over slots 0..p-1
    b = 0.0
    for j in range(p):
        b = (1.0 + g) * b + float(lam[j])
    ds.append(g * b)
    # i > position: (gamma * B~_{i-1} + lam_i) / (gamma * (1+g)^(i-1-p))
    bt = b  # running B over slots != p, currently through slot p-1
    for i in range(p + 1, k):
        # advance through slot i-1, skipping p
        if i - 1 != p:
            bt = (1.0 + g) * bt + float(lam[i - 1])
        else:
            bt = (1.0 + g) * bt  # slot p contributes nothing
        ds.append((g * bt + float(lam[i])) / (g * (1.0 + g) ** (i - 1 - p)))
    return CoordinateContext(gamma_t=g, position=position, n_selected=k,
                             d_values=tuple(ds))


def h_function(lam: float, context: CoordinateContext) -> float:
    """Stationarity function for a middle slot; positive left of the
    optimum, negative right of it."""
    if not (lam > 0 and math.isfinite(lam)):
        raise ParameterError(f"lambda must be positive finite, got {lam}")
    g = context.gamma_t
    tail = g * (1.0 + g) ** (context.n_selected - context.position)
    return 1.0 / lam - sum(1.0 / (lam + d) for d in context.d_values) - tail


def find_zero_h(context: CoordinateContext) -> float:
    """Unique zero of h by geometric bracketing from 1 and bisection to
    machine-level relative width, so |h(root)| lands well below 1e-9."""
    lo = hi = 1.0
    if h_function(1.0, context) > 0.0:
        for _ in range(_BRACKET_MAX_DOUBLINGS):
            hi *= 2.0
            if h_function(hi, context) <= 0.0:
                break
        else:
            raise NumericError(f"no sign change up to lambda={hi}")
    else:
        for _ in range(_BRACKET_MAX_DOUBLINGS):
            lo /= 2.0
            if h_function(lo, context) > 0.0:
                break
        else:
            raise NumericError(f"no sign change down to lambda={lo}")
    for _ in range(_BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval at floating-point resolution
            break
        if h_function(mid, context) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def last_lambda_opt(b_prefix: float, gamma_t: float) -> float:
    """Final-slot optimum: the positive root of lam^2 + gamma*B*lam - B,
    in the cancellation-free form 2B / (sqrt(gamma^2 B^2 + 4B) + gamma*B)."""
    if not (b_prefix > 0 and math.isfinite(b_prefix)):
        raise ParameterError(f"b_prefix must be positive finite, got {b_prefix}")
    if not (gamma_t >= 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be non-negative finite, got {gamma_t}")
    gb = gamma_t * b_prefix
    return 2.0 * b_prefix / (math.sqrt(gb * gb + 4.0 * b_prefix) + gb)


@dataclass(frozen=True)
class Theorem3Solution:
    lambda_opt: tuple
    benchmark_outage: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class GroupSchedule:
    groups: tuple
    outage: float
    trace: tuple
    evaluations: int = 0


def solve_theorem3(lambda_min: float, k: int, gamma_t: float, *,
                   tol: float = 1e-10, max_sweeps: int = 10_000) -> Theorem3Solution:
    """Stationary rate profile of the continuous relaxation: slot 1 pinned
    at lambda_min, coordinates swept to their unimodal optima (projected
    onto [lambda_min, inf)) until the largest change falls below tol."""
    if not (lambda_min > 0 and math.isfinite(lambda_min)):
        raise ParameterError(f"lambda_min must be positive finite, got {lambda_min}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not (gamma_t > 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be positive finite, got {gamma_t}")
    if k == 1:
        return Theorem3Solution((lambda_min,), phase1_outage([lambda_min], gamma_t), True, 0)

    lam = np.full(k, lambda_min, dtype=float)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        delta = 0.0
        for pos in range(2, k):
            ctx = coordinate_context(lam, pos, gamma_t)
            new = max(find_zero_h(ctx), lambda_min)
            delta = max(delta, abs(new - lam[pos - 1]))
            lam[pos - 1] = new
        b = 0.0
        for j in range(k - 1):
            b = (1.0 + gamma_t) * b + float(lam[j])
        new_last = max(last_lambda_opt(b, gamma_t), lambda_min)
        delta = max(delta, abs(new_last - lam[k - 1]))
        lam[k - 1] = new_last
        if delta <= 1e-12 + tol * float(np.max(lam)):
            converged = True
            break
    if not converged:
        raise NumericError(
            f"coordinate sweeps did not settle after {max_sweeps} iterations "
            f"(last max change {delta})"
        )
    return Theorem3Solution(
        lambda_opt=tuple(float(x) for x in lam),
        benchmark_outage=phase1_outage(lam, gamma_t),
        converged=converged,
        iterations=sweeps,
    )


def stationarity_residuals(lambdas_in_order, lambda_min: float, gamma_t: float) -> np.ndarray:
    """Per-slot violation of the optimality system; interior middle slots
    report |h|, projected slots and slot 1 report distance to lambda_min's
    pin, the last slot its closed-form mismatch."""
    lam = np.asarray(lambdas_in_order, dtype=float)
    k = lam.size
    res = np.zeros(k)
    res[0] = abs(lam[0] - lambda_min)
    for pos in range(2, k):
        if lam[pos - 1] <= lambda_min * (1.0 + 1e-9):
            continue  # projected coordinate, equality not expected
        res[pos - 1] = abs(h_function(float(lam[pos - 1]),
                                      coordinate_context(lam, pos, gamma_t)))
    if k >= 2:
        b = 0.0
        for j in range(k - 1):
            b = (1.0 + gamma_t) * b + float(lam[j])
        if lam[k - 1] > lambda_min * (1.0 + 1e-9):
            res[k - 1] = abs(lam[k - 1] - last_lambda_opt(b, gamma_t))
    return res


def _bracket_pick(window_groups, lambdas, z, current, gamma_t, selection, slot):
    """Best group for `slot` among the two window members bracketing z.

    The coordinate objective is unimodal in the slot rate with its peak at
    z, so the discrete optimum over the window is one of the bracketing
    members; evaluating both keeps every move non-increasing in outage.
    Returns (group, outage, evaluations).
    """
    if not window_groups:
        return None
    below = None
    above = None
    for g in window_groups:
        if lambdas[g] <= z:
            if below is None or lambdas[g] > lambdas[below]:
                below = g
        else:
            if above is None or lambdas[g] < lambdas[above]:
                above = g
    best = None
    evals = 0
    for cand in (below, above):
        if cand is None:
            continue
        trial = list(selection)
        trial[slot] = cand
        out = phase1_outage(lambdas[trial], gamma_t)
        evals += 1
        key = (out, abs(lambdas[cand] - z), cand)
        if best is None or key < best[0]:
            best = (key, cand, out)
    return best[1], best[2], evals


def aoius(cdi: GroupCdi, k: int, gamma_t: float, delta: float = 0.0,
          max_iters: int = 100, rng: Generator | None = None) -> GroupSchedule:
    """Alternating per-slot group reselection.

    Slot 1 is pinned to the smallest-rate group.  The other slots start as
    a random draw (sorted by rate) and are revisited in sweeps: each middle
    slot computes the continuous optimum z from find_zero_h, the final slot
    from last_lambda_opt, and moves to the best bracketing group inside its
    ordering window.  Sweeps stop once the end-of-sweep outage improves by
    at most delta (delta=0 stops on exact equality) or after max_iters.
    The returned trace starts at the initialization's outage and is
    monotone non-increasing.
    """
    lam = cdi.lambdas
    m = cdi.n_groups
    if not (1 <= k <= m):
        raise ParameterError(f"k must be in [1, {m}], got {k}")
    if not (gamma_t > 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be positive finite, got {gamma_t}")
    if delta < 0:
        raise ParameterError(f"delta must be non-negative, got {delta}")
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    if rng is None:
        rng = default_rng(0)

    first = int(np.argmin(lam))
    if k == 1:
        out = phase1_outage(lam[[first]], gamma_t)
        return GroupSchedule((first,), out, (out,), 1)

    others = np.array([g for g in range(m) if g != first], dtype=int)
    picked = rng.choice(others, size=k - 1, replace=False)
    picked = picked[np.argsort(lam[picked], kind="stable")]
    selection = [first] + [int(g) for g in picked]

    evals = 1
    outage = phase1_outage(lam[selection], gamma_t)
    trace = [outage]
    for _sweep in range(max_iters):
        for slot in range(1, k):  # 0-based; slots 2..K in 1-based terms
            unselected = [g for g in range(m) if g not in selection or g == selection[slot]]
            lower = lam[selection[slot - 1]]
            if slot < k - 1:
                upper = lam[selection[slot + 1]]
                window = [g for g in unselected if lower < lam[g] < upper]
                if not window:
                    continue
                ctx = coordinate_context(lam[selection], slot + 1, gamma_t)
                z = find_zero_h(ctx)
            else:
                window = [g for g in unselected if lam[g] > lower]
                if not window:
                    continue
                b = 0.0
                for j in range(k - 1):
                    b = (1.0 + gamma_t) * b + float(lam[selection[j]])
                z = last_lambda_opt(b, gamma_t)
            pick = _bracket_pick(window, lam, z, selection[slot], gamma_t,
                                 selection, slot)
            if pick is not None:
                selection[slot], outage, used = pick
                evals += used
        trace.append(outage)
        if trace[-2] - trace[-1] <= delta:
            break
    return GroupSchedule(
        groups=tuple(selection),
        outage=outage,
        trace=tuple(trace),
        evaluations=evals,
    )


def exhaustive_groups(cdi: GroupCdi, k: int, gamma_t: float, *,
                      max_subsets: int = 2_000_000) -> GroupSchedule:
    """Minimum-outage K-subset by full enumeration (ascending-rate decode
    order within each subset)."""
    import itertools

    lam = cdi.lambdas
    m = cdi.n_groups
    if not (1 <= k <= m):
        raise ParameterError(f"k must be in [1, {m}], got {k}")
    if not (gamma_t > 0 and math.isfinite(gamma_t)):
        raise ParameterError(f"gamma_t must be positive finite, got {gamma_t}")
    n_subsets = math.comb(m, k)
    if n_subsets > max_subsets:
        raise EnumerationBudgetError(
            f"comb({m}, {k}) = {n_subsets} exceeds budget {max_subsets}"
        )
    asc = np.argsort(lam, kind="stable")
    best_groups = None
    best_outage = math.inf
    for combo in itertools.combinations(asc.tolist(), k):
        out = phase1_outage(lam[list(combo)], gamma_t)
        if out < best_outage:
            best_outage = out
            best_groups = combo
    return GroupSchedule(
        groups=tuple(int(g) for g in best_groups),
        outage=float(best_outage),
        trace=(float(best_outage),),
        evaluations=n_subsets,
    )

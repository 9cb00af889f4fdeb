"""Exact offline optimization.

Two solvers are provided: a plain dynamic program over a per-slot layered
state graph (the oracle, linear in m), and a binary-search solver that
repeatedly optimizes over five-state windows and runs in O(T log m).
Both return the lexicographically smallest minimum-cost schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    AffineAbsCost,
    AlignmentError,
    ConfigError,
    ContractError,
    CostFunction,
    DomainError,
    InfeasibleError,
    ProblemInstance,
    ShapeError,
    TableCost,
    eval_cost,
)

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    njit = None

_REFINE_OFFSETS = np.array([-2, -1, 0, 1, 2], dtype=np.int64)

ColumnCandidates = list  # list of sorted integer tuples, one per slot


@dataclass(frozen=True)
class SolveResult:
    schedule: np.ndarray
    cost: float
    iterations: int
    states_probed: int


# ---------------------------------------------------------------------------
# cost-matrix evaluation
# ---------------------------------------------------------------------------


def evaluate_rows(functions: Sequence[CostFunction], states: np.ndarray) -> np.ndarray:
    """Operating costs for one candidate row of states per slot.

    Consecutive runs of V-shaped functions are evaluated in one vectorized
    sweep; everything else falls back to per-slot grid evaluation.
    """
    T, _ = states.shape
    out = np.empty(states.shape, dtype=np.float64)
    t = 0
    while t < T:
        if isinstance(functions[t], AffineAbsCost):
            t2 = t
            while t2 < T and isinstance(functions[t2], AffineAbsCost):
                t2 += 1
            eps = np.array([functions[i].eps for i in range(t, t2)])
            cen = np.array([functions[i].center for i in range(t, t2)])
            out[t:t2] = eps[:, None] * np.abs(states[t:t2] - cen[:, None])
            t = t2
        else:
            out[t] = functions[t].eval_grid(states[t])
            t += 1
    return out


def _row_evaluator(functions: Sequence[CostFunction]):
    """Reusable column evaluator with per-slot parameters gathered once,
    so repeated refinement passes pay only vectorized work."""
    if all(isinstance(f, AffineAbsCost) for f in functions):
        eps = np.array([f.eps for f in functions])[:, None]
        cen = np.array([f.center for f in functions])[:, None]
        return lambda S: eps * np.abs(S - cen)
    if all(isinstance(f, PaddedCost) and isinstance(f.inner, AffineAbsCost)
           for f in functions):
        eps = np.array([f.inner.eps for f in functions])[:, None]
        cen = np.array([f.inner.center for f in functions])[:, None]
        slope = np.array([f.slope for f in functions])[:, None]
        m0 = functions[0].m_orig

        def padded_rows(S):
            inner = eps * np.abs(np.minimum(S, m0) - cen)
            return np.where(S <= m0, inner, S * slope)

        return padded_rows
    return lambda S: evaluate_rows(functions, S)


# ---------------------------------------------------------------------------
# windowed DP kernel (few states per column)
# ---------------------------------------------------------------------------


def _window_dp_impl(S, F, beta):
    # S[t, i]: candidate states per slot, ascending (duplicates allowed).
    # Returns the lexicographically smallest min-cost schedule: suffix
    # values first, then a forward greedy that keeps the first argmin.
    T, W = S.shape
    H = np.zeros((T, W), dtype=np.float64)
    c = np.empty(W, dtype=np.float64)
    for t in range(T - 2, -1, -1):
        for j in range(W):
            c[j] = F[t + 1, j] + H[t + 1, j]
        for i in range(W):
            si = S[t, i]
            best = np.inf
            for j in range(W):
                d = S[t + 1, j] - si
                v = c[j] + (beta * d if d > 0 else 0.0)
                if v < best:
                    best = v
            H[t, i] = best
    x = np.empty(T, dtype=np.int64)
    best = np.inf
    bi = 0
    for i in range(W):
        v = beta * S[0, i] + F[0, i] + H[0, i]
        if v < best:
            best = v
            bi = i
    if not np.isfinite(best):
        return x, False
    x[0] = S[0, bi]
    prev = x[0]
    for t in range(1, T):
        best = np.inf
        bi = 0
        for i in range(W):
            d = S[t, i] - prev
            v = F[t, i] + H[t, i] + (beta * d if d > 0 else 0.0)
            if v < best:
                best = v
                bi = i
        x[t] = S[t, bi]
        prev = x[t]
    return x, True


if njit is not None:
    _window_dp = njit(cache=True)(_window_dp_impl)
else:  # pragma: no cover
    _window_dp = _window_dp_impl


def warm_kernels() -> None:
    """Trigger JIT compilation so timed runs measure the algorithm only."""
    S = np.array([[0, 1], [0, 1]], dtype=np.int64)
    F = np.zeros((2, 2), dtype=np.float64)
    _window_dp(S, F, 1.0)


# ---------------------------------------------------------------------------
# full-grid DP (oracle)
# ---------------------------------------------------------------------------


def _dp_grid(instance: ProblemInstance) -> tuple[np.ndarray, int]:
    """O(m)-per-column DP over the full allowed grid, via running prefix
    minima of the reach costs and suffix minima of the climb costs."""
    states = instance.allowed_states()
    sf = states.astype(np.float64)
    beta = instance.beta
    fns = instance.functions
    T = instance.T
    H = np.empty((T, states.size), dtype=np.float64)
    H[T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        c = fns[t + 1].eval_grid(states) + H[t + 1]
        pref = np.minimum.accumulate(c)
        suf = np.minimum.accumulate((c + beta * sf)[::-1])[::-1]
        H[t] = np.minimum(pref, suf - beta * sf)
    x = np.empty(T, dtype=np.int64)
    v = beta * sf + fns[0].eval_grid(states) + H[0]
    if not np.isfinite(v.min()):
        raise InfeasibleError("no feasible schedule exists")
    x[0] = states[int(np.argmin(v))]
    for t in range(1, T):
        climb = beta * np.maximum(sf - x[t - 1], 0.0)
        v = climb + fns[t].eval_grid(states) + H[t]
        x[t] = states[int(np.argmin(v))]
    return x, T * states.size


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def _columns_to_matrix(instance: ProblemInstance,
                       columns: Sequence[Sequence[int]]) -> np.ndarray:
    if len(columns) != instance.T:
        raise ShapeError(f"expected {instance.T} candidate columns, got {len(columns)}")
    width = 0
    for t, col in enumerate(columns, start=1):
        if len(col) == 0:
            raise ShapeError(f"empty candidate set in column {t}")
        width = max(width, len(col))
    S = np.empty((instance.T, width), dtype=np.int64)
    for t, col in enumerate(columns):
        states = sorted(col)
        for s in states:
            if not instance.is_allowed(int(s)):
                raise DomainError(f"candidate state {s} in column {t + 1} is not allowed")
        row = states + [states[-1]] * (width - len(states))
        S[t] = row
    return S


def dp_optimal(instance: ProblemInstance,
               columns: Sequence[Sequence[int]] | None = None) -> SolveResult:
    """Minimum-cost schedule over the given candidate states per slot.

    With ``columns=None`` the full allowed grid is used in every slot.
    Among equal-cost optima the lexicographically smallest schedule is
    returned, and the reported cost is re-evaluated from the schedule.
    """
    if columns is None:
        x, probed = _dp_grid(instance)
    else:
        S = _columns_to_matrix(instance, columns)
        F = evaluate_rows(instance.functions, S)
        x, feasible = _window_dp(S, F, instance.beta)
        if not feasible:
            raise InfeasibleError("no feasible schedule exists")
        probed = S.size
    cost = eval_cost(instance, x).total
    if not math.isfinite(cost):
        raise InfeasibleError("no feasible schedule exists")
    return SolveResult(schedule=x, cost=cost, iterations=1, states_probed=probed)


class PaddedCost(CostFunction):
    """Original cost below the true fleet size, a steep linear penalty
    ``x * (f(m) + eps_pad)`` above it."""

    kind = "padded"

    def __init__(self, inner: CostFunction, m_orig: int, eps_pad: float):
        self.inner = inner
        self.m_orig = int(m_orig)
        self.slope = inner(m_orig) + eps_pad

    def __call__(self, x: float) -> float:
        if x <= self.m_orig:
            return self.inner(x)
        return x * self.slope

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        inside = self.inner.eval_grid(np.minimum(xs, self.m_orig))
        return np.where(xs <= self.m_orig, inside, xs * self.slope)


def pad_to_power_of_two(instance: ProblemInstance, eps_pad: float = 1.0) -> ProblemInstance:
    """Grow the fleet to the next power of two; the identity if it already
    is one. Padded states are strictly dominated whenever eps_pad > 0."""
    if eps_pad <= 0:
        raise ConfigError("eps_pad must be positive")
    m = instance.m
    if m & (m - 1) == 0:
        return instance
    m2 = 1 << m.bit_length()
    fns = tuple(PaddedCost(f, m, eps_pad) for f in instance.functions)
    return instance.replace(m=m2, functions=fns)


def refine_candidates(schedule: Sequence[int], k: int, m: int) -> ColumnCandidates:
    """Candidate columns for a grid twice as fine around a coarse optimum:
    per slot, the five states x +/- {0, 1, 2} * 2^(k-1), clipped to [0, m]."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    step = 1 << k
    half = step >> 1
    cols: ColumnCandidates = []
    for t, x in enumerate(np.asarray(schedule, dtype=np.int64), start=1):
        if x % step != 0:
            raise AlignmentError(f"state {int(x)} in slot {t} is not a multiple of {step}")
        vals = x + _REFINE_OFFSETS * half
        vals = vals[(vals >= 0) & (vals <= m)]
        cols.append(tuple(int(v) for v in vals))
    return cols


def solve_poly(instance: ProblemInstance, eps_pad: float = 1.0) -> SolveResult:
    """Optimal schedule by binary search over nested five-state windows.

    After padding the fleet to a power of two, iteration k restricts the
    states to multiples of 2^k: the first pass uses the five rows
    {0, m/4, m/2, 3m/4, m}, and each later pass re-centers a five-state
    window on the previous optimum.  Fleets below four states fall back
    to the full DP.
    """
    if instance.allowed_step != 1:
        raise ConfigError("the window solver requires the full state grid")
    padded = pad_to_power_of_two(instance, eps_pad)
    mp = padded.m
    if mp < 4:
        res = dp_optimal(instance)
        return res
    K = mp.bit_length() - 3  # mp = 2^(K+2)
    T = instance.T
    beta = instance.beta
    rows = _row_evaluator(padded.functions)
    S = np.tile(np.arange(5, dtype=np.int64) * (1 << K), (T, 1))
    probed = 0
    x = None
    for k in range(K, -1, -1):
        F = rows(S)
        x, feasible = _window_dp(S, F, beta)
        if not feasible:
            raise InfeasibleError("no feasible schedule exists")
        probed += S.size
        if k > 0:
            half = 1 << (k - 1)
            S = np.clip(x[:, None] + _REFINE_OFFSETS * half, 0, mp)
    if int(x.max()) > instance.m:
        raise ContractError("padded state survived into the final schedule")
    cost = eval_cost(instance, x).total
    if not math.isfinite(cost):
        raise InfeasibleError("no feasible schedule exists")
    return SolveResult(schedule=x, cost=cost, iterations=K + 1, states_probed=probed)


# ---------------------------------------------------------------------------
# instance transforms
# ---------------------------------------------------------------------------


class _DomainScaledCost(CostFunction):
    """Evaluates the wrapped function at ``x * factor`` (exact values)."""

    kind = "domain_scaled"

    def __init__(self, inner: CostFunction, factor: int):
        self.inner = inner
        self.factor = int(factor)

    def __call__(self, x: float) -> float:
        return self.inner(x * self.factor)

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return self.inner.eval_grid(np.asarray(xs) * self.factor)


def restrict_phi(instance: ProblemInstance, k: int) -> ProblemInstance:
    """Keep only states that are multiples of 2^k (grid coarsening)."""
    if k < 0:
        raise ConfigError("k must be >= 0")
    step = math.lcm(instance.allowed_step, 1 << k)
    if step > instance.m:
        raise ConfigError(f"grid step {step} leaves only the idle state")
    return instance.replace(allowed_step=step)


def scale_psi(instance: ProblemInstance, l: int) -> ProblemInstance:
    """Shrink the state space by 2^l and scale the switching constant up by
    2^l; schedules map by division and keep exactly the same cost."""
    if l < 0:
        raise ConfigError("l must be >= 0")
    if l == 0:
        return instance
    fac = 1 << l
    if instance.m % fac != 0:
        raise AlignmentError(f"m = {instance.m} is not divisible by {fac}")
    if instance.allowed_step % fac != 0:
        raise AlignmentError(f"allowed states are not all divisible by {fac}")
    fns = []
    for f in instance.functions:
        if isinstance(f, TableCost):
            fns.append(TableCost(f.values[::fac]))
        elif isinstance(f, AffineAbsCost):
            fns.append(AffineAbsCost(f.eps * fac, f.center / fac))
        else:
            fns.append(_DomainScaledCost(f, fac))
    return instance.replace(m=instance.m // fac, beta=instance.beta * fac,
                            functions=tuple(fns),
                            allowed_step=instance.allowed_step // fac)


def round_fractional(xbar: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise floor and ceiling of a fractional schedule."""
    arr = np.asarray(xbar, dtype=np.float64)
    return np.floor(arr).astype(np.int64), np.ceil(arr).astype(np.int64)


class _FractionalGridCost(CostFunction):
    """Interpolated operating cost sampled on a grid of spacing 1/denom."""

    kind = "fractional_grid"

    def __init__(self, inner: CostFunction, denom: int):
        self.inner = inner
        self.denom = int(denom)

    def __call__(self, j: float) -> float:
        num, denom = int(j), self.denom
        q, r = divmod(num, denom)
        if r == 0:
            return self.inner(q)
        frac = r / denom
        return (1.0 - frac) * self.inner(q) + frac * self.inner(q + 1)


def fractional_grid_optimum(instance: ProblemInstance, denom: int = 2) -> np.ndarray:
    """Optimal fractional schedule over the grid of multiples of 1/denom,
    using interpolated operating costs.  denom should be a power of two so
    the grid costs match the continuous extension exactly."""
    if denom < 1:
        raise ConfigError("denom must be a positive integer")
    fns = tuple(_FractionalGridCost(f, denom) for f in instance.functions)
    grid = ProblemInstance(instance.T, instance.m * denom, instance.beta / denom,
                           fns, convention=instance.convention)
    res = dp_optimal(grid)
    return res.schedule.astype(np.float64) / denom

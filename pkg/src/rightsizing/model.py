"""Problem instances, cost functions, and schedule cost evaluation.

A problem instance couples a horizon of convex per-slot operating-cost
functions with a switching cost charged when servers are powered up
(`up_only` convention) or split evenly between power-ups and power-downs
(`symmetric` convention).  Schedules are integer server counts per slot,
implicitly starting and ending with every server asleep.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

CONVENTIONS = ("up_only", "symmetric")

#: Default number of probe points used to validate closed-form cost
#: functions on very large state spaces (full scan below this budget).
VALIDATE_SAMPLE_BUDGET = 1 << 16


class DomainError(ValueError):
    """A state is outside [0, m] or not in the allowed-state set."""


class ShapeError(ValueError):
    """A schedule or candidate structure has the wrong length."""


class InfeasibleError(ValueError):
    """A schedule violates a per-slot feasibility constraint."""


class AlignmentError(ValueError):
    """A state is not aligned to the required grid."""


class ConfigError(ValueError):
    """An algorithm parameter is outside its admissible set."""


class ContractError(RuntimeError):
    """A numerical post-condition was violated beyond tolerance."""


class SchemaError(ValueError):
    """An instance document does not match the JSON schema."""


# ---------------------------------------------------------------------------
# cost functions
# ---------------------------------------------------------------------------


class CostFunction:
    """Evaluable operating-cost function on integer server counts.

    Subclasses implement ``__call__`` for a single state and may override
    ``eval_grid`` with a vectorized version.  Values must be non-negative;
    ``math.inf`` marks states that are infeasible for the slot.
    """

    kind = "abstract"

    def __call__(self, x: float) -> float:
        raise NotImplementedError

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self(int(v)) for v in np.asarray(xs).ravel()],
                        dtype=np.float64).reshape(np.shape(xs))


class TableCost(CostFunction):
    """Cost function materialized as a table over 0..m."""

    kind = "table"

    def __init__(self, values: Sequence[float]):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ShapeError("table must be a non-empty 1-d sequence")

    def __call__(self, x: float) -> float:
        return float(self.values[int(x)])

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return self.values[np.asarray(xs, dtype=np.int64)]


class AffineAbsCost(CostFunction):
    """V-shaped cost ``eps * |x - center|``."""

    kind = "affine_abs"

    def __init__(self, eps: float, center: float):
        if eps <= 0:
            raise ConfigError("eps must be positive")
        self.eps = float(eps)
        self.center = float(center)

    def __call__(self, x: float) -> float:
        return self.eps * abs(x - self.center)

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return self.eps * np.abs(np.asarray(xs, dtype=np.float64) - self.center)


class RestrictedLoadCost(CostFunction):
    """Cost of spreading a load over x servers: ``x * unit(load / x)``.

    ``unit`` is the convex cost of one server at utilisation z in [0, 1].
    States below the load are infeasible and evaluate to ``inf``; an idle
    slot (x = 0, load = 0) costs nothing.
    """

    kind = "restricted"

    def __init__(self, unit: Callable[[float], float] | None, load: float,
                 *, eps: float | None = None, slope_k: float | None = None):
        if unit is None:
            if eps is None or slope_k is None:
                raise ConfigError("need either a unit function or (eps, slope_k)")
            unit = lambda z: eps * abs(1.0 - slope_k * z)  # noqa: E731
        if load < 0:
            raise ConfigError("load must be non-negative")
        self.unit = unit
        self.load = float(load)
        self.eps = eps
        self.slope_k = slope_k

    def __call__(self, x: float) -> float:
        if x < self.load:
            return math.inf
        if x == 0:
            return 0.0
        return x * self.unit(self.load / x)


class ScaledCost(CostFunction):
    """Another cost function multiplied by a positive factor."""

    kind = "scaled"

    def __init__(self, inner: CostFunction, factor: float):
        if factor <= 0:
            raise ConfigError("factor must be positive")
        self.inner = inner
        self.factor = float(factor)

    def __call__(self, x: float) -> float:
        return self.factor * self.inner(x)

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return self.factor * self.inner.eval_grid(xs)


class StretchedCopyCost(CostFunction):
    """One of ``divisor`` equal-weight copies of a cost function.

    The copies of one slot sum back to the original function; with a
    power-of-two divisor the identity is exact in floating point.
    """

    kind = "stretched_copy"

    def __init__(self, inner: CostFunction, divisor: int):
        if divisor < 1:
            raise ConfigError("divisor must be a positive integer")
        self.inner = inner
        self.divisor = int(divisor)

    def __call__(self, x: float) -> float:
        return self.inner(x) / self.divisor

    def eval_grid(self, xs: np.ndarray) -> np.ndarray:
        return self.inner.eval_grid(xs) / self.divisor


# ---------------------------------------------------------------------------
# instances and schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemInstance:
    """Right-sizing instance: horizon, fleet size, switching constant,
    per-slot cost functions, allowed-state grid, and cost convention.

    ``allowed_step`` restricts schedules to multiples of that step
    (1 means every integer in [0, m] is allowed; 0 is always allowed).
    """

    T: int
    m: int
    beta: float
    functions: tuple[CostFunction, ...]
    allowed_step: int = 1
    convention: str = "up_only"

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be a positive integer")
        if self.m < 1:
            raise ConfigError("m must be a positive integer")
        if not (self.beta > 0):
            raise ConfigError("beta must be positive")
        if len(self.functions) != self.T:
            raise ShapeError(f"expected {self.T} cost functions, got {len(self.functions)}")
        if self.allowed_step < 1 or self.allowed_step > self.m:
            raise ConfigError("allowed_step must lie in [1, m]")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "functions", tuple(self.functions))

    def is_allowed(self, x: int) -> bool:
        return 0 <= x <= self.m and x % self.allowed_step == 0

    def allowed_states(self) -> np.ndarray:
        return np.arange(0, self.m + 1, self.allowed_step, dtype=np.int64)

    def replace(self, **kw) -> "ProblemInstance":
        base = dict(T=self.T, m=self.m, beta=self.beta, functions=self.functions,
                    allowed_step=self.allowed_step, convention=self.convention)
        base.update(kw)
        return ProblemInstance(**base)


@dataclass(frozen=True)
class RestrictedInstance:
    """Single-shape variant: one unit-load cost function plus a load per
    slot, with the feasibility constraint x_t >= load_t."""

    T: int
    m: int
    beta: float
    unit: Callable[[float], float]
    loads: tuple[float, ...]
    convention: str = "up_only"

    def __post_init__(self):
        if len(self.loads) != self.T:
            raise ShapeError(f"expected {self.T} loads, got {len(self.loads)}")
        if any(l < 0 for l in self.loads):
            raise ConfigError("loads must be non-negative")
        if any(l > self.m for l in self.loads):
            raise InfeasibleError("a load exceeds the number of servers")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "loads", tuple(float(l) for l in self.loads))

    def to_general(self) -> ProblemInstance:
        """General-model view: per-slot load costs, infeasible states -> inf."""
        fns = tuple(RestrictedLoadCost(self.unit, l) for l in self.loads)
        return ProblemInstance(self.T, self.m, self.beta, fns,
                               convention=self.convention)


@dataclass(frozen=True)
class CostBreakdown:
    operating: float
    switching: float
    total: float

    @classmethod
    def of(cls, operating: float, switching: float) -> "CostBreakdown":
        return cls(operating, switching, operating + switching)


def as_schedule(x: Iterable[int]) -> np.ndarray:
    arr = np.asarray(list(x) if not isinstance(x, (np.ndarray, list, tuple)) else x)
    if arr.ndim != 1:
        raise ShapeError("schedule must be one-dimensional")
    if arr.size and not np.all(arr == np.floor(arr)):
        raise DomainError("schedule states must be integers")
    return arr.astype(np.int64)


def _switching_cost(beta: float, convention: str, diffs_up: int, diffs_abs: int) -> float:
    # Single multiply of an integer move count keeps the two conventions
    # bit-identical on closed trajectories.
    if convention == "up_only":
        return beta * float(diffs_up)
    return (beta / 2.0) * float(diffs_abs)


def eval_cost(instance: ProblemInstance, schedule: Iterable[int]) -> CostBreakdown:
    """Total cost of an integer schedule under the instance's convention.

    The trajectory is closed: x_0 = 0 always, and under the symmetric
    convention the final power-down to x_{T+1} = 0 is charged as well.
    """
    x = as_schedule(schedule)
    if x.size != instance.T:
        raise ShapeError(f"schedule length {x.size} != T = {instance.T}")
    if np.any(x < 0) or np.any(x > instance.m):
        raise DomainError("schedule state outside [0, m]")
    if instance.allowed_step > 1 and np.any(x % instance.allowed_step != 0):
        raise DomainError(f"schedule state not a multiple of {instance.allowed_step}")
    operating = math.fsum(f(int(v)) for f, v in zip(instance.functions, x))
    closed = np.concatenate(([0], x, [0]))
    d = np.diff(closed)
    up = int(np.maximum(d[:-1], 0).sum())          # power-ups over t = 1..T
    total_abs = int(np.abs(d).sum())               # both directions, t = 1..T+1
    switching = _switching_cost(instance.beta, instance.convention, up, total_abs)
    return CostBreakdown.of(operating, switching)


def eval_restricted(instance: RestrictedInstance, schedule: Iterable[int]) -> CostBreakdown:
    """Cost of a schedule in the restricted model; x_t >= load_t required."""
    x = as_schedule(schedule)
    if x.size != instance.T:
        raise ShapeError(f"schedule length {x.size} != T = {instance.T}")
    if np.any(x < 0) or np.any(x > instance.m):
        raise DomainError("schedule state outside [0, m]")
    for t, (v, load) in enumerate(zip(x, instance.loads), start=1):
        if v < load:
            raise InfeasibleError(f"x_{t} = {int(v)} is below the load {load}")
    terms = []
    for v, load in zip(x, instance.loads):
        terms.append(0.0 if v == 0 else v * instance.unit(load / v))
    operating = math.fsum(terms)
    closed = np.concatenate(([0], x, [0]))
    d = np.diff(closed)
    up = int(np.maximum(d[:-1], 0).sum())
    total_abs = int(np.abs(d).sum())
    switching = _switching_cost(instance.beta, instance.convention, up, total_abs)
    return CostBreakdown.of(operating, switching)


class ContinuousEvaluator:
    """Fractional relaxation of an instance.

    Operating costs are interpolated linearly between consecutive integer
    states; switching uses the same formulas with real-valued moves.
    """

    def __init__(self, instance: ProblemInstance):
        self.instance = instance

    def operating(self, t: int, x: float) -> float:
        """Interpolated cost of x in (0-based) slot t."""
        inst = self.instance
        if not (0 <= x <= inst.m):
            raise DomainError(f"state {x} outside [0, {inst.m}]")
        f = inst.functions[t]
        lo = math.floor(x)
        hi = math.ceil(x)
        if lo == hi:
            return f(lo)
        return (hi - x) * f(lo) + (x - lo) * f(hi)

    def cost(self, xbar: Iterable[float]) -> CostBreakdown:
        arr = np.asarray(list(xbar), dtype=np.float64)
        inst = self.instance
        if arr.size != inst.T:
            raise ShapeError(f"fractional schedule length {arr.size} != T = {inst.T}")
        if np.any(arr < 0) or np.any(arr > inst.m):
            raise DomainError("fractional state outside [0, m]")
        operating = math.fsum(self.operating(t, v) for t, v in enumerate(arr))
        closed = np.concatenate(([0.0], arr, [0.0]))
        d = np.diff(closed)
        if inst.convention == "up_only":
            switching = inst.beta * float(np.maximum(d[:-1], 0).sum())
        else:
            switching = (inst.beta / 2.0) * float(np.abs(d).sum())
        return CostBreakdown.of(operating, switching)


def extend_continuous(instance: ProblemInstance) -> ContinuousEvaluator:
    return ContinuousEvaluator(instance)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _probe_points(m: int, budget: int) -> np.ndarray:
    if m + 1 <= budget:
        return np.arange(m + 1, dtype=np.int64)
    pts = np.unique(np.linspace(0, m, budget).astype(np.int64))
    return pts


def validate_instance(instance: ProblemInstance,
                      sample_budget: int = VALIDATE_SAMPLE_BUDGET) -> list[str]:
    """Check shape, non-negativity, and discrete convexity.

    Returns a list of human-readable violations; an empty list means the
    instance is well formed.  Tables are scanned fully; closed-form
    functions are probed at up to ``sample_budget`` points (endpoints
    always included).
    """
    violations: list[str] = []
    if not (instance.beta > 0):
        violations.append("beta must be positive")
    if len(instance.functions) != instance.T:
        violations.append(f"expected {instance.T} cost functions, got {len(instance.functions)}")
    for t, f in enumerate(instance.functions, start=1):
        if isinstance(f, TableCost):
            if f.values.size != instance.m + 1:
                violations.append(f"f_{t}: table has {f.values.size} entries, expected {instance.m + 1}")
                continue
            pts = np.arange(instance.m + 1, dtype=np.int64)
            vals = f.values
        else:
            pts = _probe_points(instance.m, sample_budget)
            vals = np.array([f(int(p)) for p in pts], dtype=np.float64)
        finite = np.isfinite(vals)
        if np.any(np.isnan(vals)):
            violations.append(f"f_{t}: NaN value")
            continue
        if np.any(vals[finite] < 0):
            bad = int(pts[finite][np.argmax(vals[finite] < 0)])
            violations.append(f"f_{t}: negative value at x={bad}")
        if np.any(finite):
            lo, hi = np.argmax(finite), len(finite) - np.argmax(finite[::-1]) - 1
            if not np.all(finite[lo:hi + 1]):
                violations.append(f"f_{t}: infeasible states interleave feasible ones")
        # Convexity on the finite range, consecutive probes only.
        for i in range(1, len(pts) - 1):
            if pts[i] - pts[i - 1] != 1 or pts[i + 1] - pts[i] != 1:
                continue
            a, b, c = vals[i - 1], vals[i], vals[i + 1]
            if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
                continue
            second = a - 2.0 * b + c
            if second < -1e-9 * max(1.0, abs(a), abs(b), abs(c)):
                violations.append(f"f_{t}: not convex at x={int(pts[i])} "
                                  f"(second difference {second:g} < 0)")
                break
    return violations


# ---------------------------------------------------------------------------
# JSON instance schema
# ---------------------------------------------------------------------------


def function_to_json(f: CostFunction) -> dict:
    if isinstance(f, TableCost):
        return {"kind": "table", "values": [float(v) for v in f.values]}
    if isinstance(f, AffineAbsCost):
        return {"kind": "affine_abs", "eps": f.eps, "center": f.center}
    if isinstance(f, RestrictedLoadCost):
        if f.eps is None or f.slope_k is None:
            raise SchemaError("only (eps, slope_k) load costs are serializable")
        return {"kind": "restricted", "eps": f.eps, "slope_k": f.slope_k,
                "lambda": f.load}
    raise SchemaError(f"cost kind {f.kind!r} has no JSON form")


def function_from_json(doc: dict) -> CostFunction:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SchemaError("function entry must be an object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "table":
            return TableCost(doc["values"])
        if kind == "affine_abs":
            return AffineAbsCost(float(doc["eps"]), float(doc["center"]))
        if kind == "restricted":
            return RestrictedLoadCost(None, float(doc["lambda"]),
                                      eps=float(doc["eps"]),
                                      slope_k=float(doc["slope_k"]))
    except KeyError as exc:
        raise SchemaError(f"function kind {kind!r} is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"function kind {kind!r}: {exc}") from exc
    raise SchemaError(f"unknown function kind {kind!r}")


def instance_to_json(instance: ProblemInstance) -> dict:
    conv = "up_only" if instance.convention == "up_only" else "symmetric"
    return {
        "T": instance.T,
        "m": instance.m,
        "beta": instance.beta,
        "convention": conv,
        "functions": [function_to_json(f) for f in instance.functions],
    }


def instance_from_json(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise SchemaError("instance document must be a JSON object")
    for field in ("T", "m", "beta", "convention", "functions"):
        if field not in doc:
            raise SchemaError(f"missing field {field!r}")
    conv = doc["convention"]
    if conv not in ("up_only", "symmetric"):
        raise SchemaError(f"convention must be 'up_only' or 'symmetric', got {conv!r}")
    if not isinstance(doc["functions"], list):
        raise SchemaError("'functions' must be an array")
    try:
        T = int(doc["T"])
        m = int(doc["m"])
        beta = float(doc["beta"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc
    fns = tuple(function_from_json(d) for d in doc["functions"])
    try:
        return ProblemInstance(T, m, beta, fns, convention=conv)
    except (ConfigError, ShapeError) as exc:
        raise SchemaError(str(exc)) from exc


def load_instance(path: str) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    return instance_from_json(doc)

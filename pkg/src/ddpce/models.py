"""
Ground-truth models evaluated inside the Monte Carlo loop.

Besides three closed-form UQ benchmark functions this module carries a
reduced-fidelity emergency dispatch model: during an islanding event of
``duration`` hours starting at ``start_hour``, local generation and then
battery discharge serve the load priority levels from most to least
critical, and unserved energy of level ``k`` is charged at penalty
``lambda_k``.  Hours outside the event cost nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "TEST_FUNCTIONS",
    "eval_test_function",
    "ishigami",
    "product_peak",
    "poly_d3",
    "Storage",
    "PriorityLevel",
    "DispatchConfig",
    "ResilienceOutcome",
    "shed_hour",
    "eval_dispatch",
    "eval_dispatch_batch",
    "default_dispatch_config",
]


def ishigami(x, a=7.0, b=0.1):
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3**4 * np.sin(x1)


def product_peak(x, c=5.0, w=0.5):
    """Genz product-peak function ``prod_j 1 / (c**-2 + (x_j - w)**2)``."""
    x = np.asarray(x, dtype=float)
    return np.prod(1.0 / (c**-2 + (x - w) ** 2), axis=-1)


def poly_d3(x):
    """Fixed quadratic in three variables; value 1 at the origin."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return 1.0 + x1 + 2.0 * x2 - x3 + 0.5 * x1 * x2 + x3**2 - 0.25 * x2**2


# name -> (function, arity); arity None accepts any d >= 1
TEST_FUNCTIONS = {
    "ishigami": (ishigami, 3),
    "product_peak": (product_peak, None),
    "poly_d3": (poly_d3, 3),
}


def eval_test_function(name: str, x):
    """Evaluate a benchmark at one point (returns float) or a batch ``(n, d)``."""
    try:
        func, arity = TEST_FUNCTIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}"
        ) from None
    x = np.asarray(x, dtype=float)
    d = x.shape[-1] if x.ndim else 1
    if arity is not None and d != arity:
        raise ConfigurationError(f"{name} takes {arity} inputs, got {d}")
    out = func(np.atleast_1d(x))
    return float(out) if x.ndim <= 1 else out


@dataclass(frozen=True)
class Storage:
    capacity: float
    power: float
    initial: float
    efficiency: float = 1.0

    def __post_init__(self):
        if min(self.capacity, self.power, self.initial) < 0:
            raise ConfigurationError("storage sizes must be >= 0")
        if self.initial > self.capacity:
            raise ConfigurationError("initial storage level exceeds capacity")
        if not 0 < self.efficiency <= 1:
            raise ConfigurationError("storage efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class PriorityLevel:
    fraction: float
    penalty: float


@dataclass(frozen=True, eq=False)
class DispatchConfig:
    """Reduced emergency-dispatch system.

    ``levels`` are ordered from most to least critical; their demand
    fractions sum to one and their penalties strictly decrease.
    ``generation`` and ``base_load`` hold one value per hour of the horizon.
    """

    levels: tuple
    generation: np.ndarray
    base_load: np.ndarray
    storage: Storage
    horizon: int = 24

    def __post_init__(self):
        levels = tuple(
            lv if isinstance(lv, PriorityLevel) else PriorityLevel(*map(float, lv))
            for lv in self.levels
        )
        if not levels:
            raise ConfigurationError("at least one priority level is required")
        fracs = [lv.fraction for lv in levels]
        pens = [lv.penalty for lv in levels]
        if min(fracs) < 0 or not math.isclose(sum(fracs), 1.0, abs_tol=1e-9):
            raise ConfigurationError(f"demand fractions must be >= 0 and sum to 1, got {fracs}")
        if any(a <= b for a, b in zip(pens, pens[1:])) or min(pens) < 0:
            raise ConfigurationError(f"penalties must be >= 0 and strictly decreasing, got {pens}")
        object.__setattr__(self, "levels", levels)
        for name in ("generation", "base_load"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if arr.size == 1:
                arr = np.full(self.horizon, arr[0])
            if arr.shape != (self.horizon,):
                raise ConfigurationError(f"{name} needs {self.horizon} hourly values, got {arr.size}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"{name} values must be finite and >= 0")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def fractions(self) -> np.ndarray:
        return np.array([lv.fraction for lv in self.levels])

    @property
    def penalties(self) -> np.ndarray:
        return np.array([lv.penalty for lv in self.levels])


@dataclass(frozen=True, eq=False)
class ResilienceOutcome:
    total_cost: float
    shed_energy_by_level: np.ndarray
    served_energy_by_level: np.ndarray
    demand_energy_by_level: np.ndarray
    emergency_window: tuple
    state_of_charge: np.ndarray = field(repr=False)
    discharge: np.ndarray = field(repr=False)


def shed_hour(supply: float, demands: Sequence[float]):
    """Serve ``demands`` (most critical first) from ``supply``; returns (served, shed)."""
    remaining = supply
    served = []
    for dem in demands:
        s = min(dem, remaining)
        served.append(s)
        remaining -= s
    served = np.array(served, dtype=float)
    return served, np.asarray(demands, dtype=float) - served


def _window(config, start_hour, duration):
    if not (math.isfinite(start_hour) and math.isfinite(duration)):
        raise ConfigurationError("event start and duration must be finite")
    if not 0 <= start_hour < config.horizon:
        raise ConfigurationError(f"start hour {start_hour} outside [0, {config.horizon})")
    if duration < 0:
        raise ConfigurationError(f"negative event duration {duration}")
    start = int(math.floor(start_hour + 0.5))
    dur = int(math.floor(duration + 0.5))
    end = min(start + dur, config.horizon)
    return start, max(end - start, 0)


def eval_dispatch(config: DispatchConfig, x) -> ResilienceOutcome:
    """Greedy priority-stack dispatch for one scenario ``[load_scale, start_hour, duration]``.

    Start and duration are rounded to whole hours and the event window is
    clipped to the horizon.
    """
    load_scale, start_hour, duration = (float(v) for v in x)
    if not (math.isfinite(load_scale) and load_scale >= 0):
        raise ConfigurationError(f"load scale must be finite and >= 0, got {load_scale}")
    start, dur = _window(config, start_hour, duration)
    st = config.storage
    fr = config.fractions
    n_lv = len(fr)
    shed_tot = np.zeros(n_lv)
    served_tot = np.zeros(n_lv)
    demand_tot = np.zeros(n_lv)
    soc = [st.initial]
    dis = []
    level = st.initial
    for t in range(start, start + dur):
        demands = load_scale * config.base_load[t] * fr
        gen = config.generation[t]
        deliverable = min(st.power, level * st.efficiency)
        served, shed = shed_hour(gen + deliverable, demands)
        from_storage = min(max(served.sum() - gen, 0.0), deliverable)
        level = max(level - from_storage / st.efficiency, 0.0)
        dis.append(from_storage)
        soc.append(level)
        shed_tot += shed
        served_tot += served
        demand_tot += demands
    cost = float(np.dot(config.penalties, shed_tot))
    return ResilienceOutcome(
        cost, shed_tot, served_tot, demand_tot, (start, dur), np.array(soc), np.array(dis)
    )


def eval_dispatch_batch(config: DispatchConfig, x) -> np.ndarray:
    """Total cost for each row of an ``(n, 3)`` scenario array (vectorised over scenarios)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != 3:
        raise ConfigurationError(f"dispatch scenarios need 3 columns, got {x.shape[1]}")
    scale, s_hr, dur_hr = x[:, 0], x[:, 1], x[:, 2]
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("event parameters must be finite")
    if np.any(scale < 0):
        raise ConfigurationError("load scale must be >= 0")
    if np.any((s_hr < 0) | (s_hr >= config.horizon)):
        raise ConfigurationError(f"start hour outside [0, {config.horizon})")
    if np.any(dur_hr < 0):
        raise ConfigurationError("negative event duration")
    start = np.floor(s_hr + 0.5)
    end = np.minimum(start + np.floor(dur_hr + 0.5), config.horizon)

    st = config.storage
    fr = config.fractions
    pen = config.penalties
    level = np.full(x.shape[0], st.initial)
    cost = np.zeros(x.shape[0])
    for t in range(config.horizon):
        active = (t >= start) & (t < end)
        if not active.any():
            continue
        gen = config.generation[t]
        total = scale[active] * config.base_load[t]
        lv = level[active]
        deliverable = np.minimum(st.power, lv * st.efficiency)
        remaining = gen + deliverable
        served_sum = np.zeros_like(total)
        c = np.zeros_like(total)
        for f, p in zip(fr, pen):
            dem = total * f
            s = np.minimum(dem, remaining)
            remaining = remaining - s
            served_sum += s
            c += p * (dem - s)
        from_storage = np.minimum(np.maximum(served_sum - gen, 0.0), deliverable)
        level[active] = np.maximum(lv - from_storage / st.efficiency, 0.0)
        cost[active] += c
    return cost


def default_dispatch_config() -> DispatchConfig:
    """Illustrative islanded feeder in per-unit; not calibrated to any real system."""
    base = np.array([
        0.62, 0.58, 0.56, 0.55, 0.57, 0.63, 0.74, 0.86, 0.93, 0.96, 0.98, 1.00,
        1.00, 0.99, 0.97, 0.97, 1.00, 1.08, 1.16, 1.20, 1.15, 1.02, 0.86, 0.72,
    ])
    gen = np.array([
        0.30, 0.30, 0.30, 0.30, 0.30, 0.32, 0.38, 0.46, 0.55, 0.62, 0.67, 0.70,
        0.70, 0.68, 0.63, 0.56, 0.47, 0.39, 0.33, 0.30, 0.30, 0.30, 0.30, 0.30,
    ])
    return DispatchConfig(
        levels=((0.3, 100.0), (0.3, 20.0), (0.4, 5.0)),
        generation=gen,
        base_load=base,
        storage=Storage(capacity=0.6, power=0.1, initial=0.5, efficiency=0.95),
    )

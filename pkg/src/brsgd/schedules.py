"""Step-size schedules, the iterate-weighting sequence, and weighted sampling.

The weighting sequence W_{-1} = 1,
    W_k = W_{k-1} * alpha_k / (alpha_{k-1} * (1 + L A' alpha_k^2)),
with the convention alpha_{-1} := alpha_0, turns per-iteration descent
inequalities into a bound on the minimum gradient norm and doubles as the
sampling distribution for the returned iterate: P(R_K = k) proportional to
W_k for k < K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConstraintError

SCHEDULE_FORMS = ("power-law", "constant", "custom")


@dataclass(frozen=True)
class Schedule:
    """Step-size sequence alpha_k for k >= 0, with alpha_{-1} := alpha_0.

    power-law: alpha_k = c (k+1)^{-p}; constant: alpha_k = c; custom: finite
    table of explicit positive values (the horizon is the table length).
    """

    form: str
    c: float = 1.0
    p: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.form not in SCHEDULE_FORMS:
            raise ConfigError(f"unknown schedule form {self.form!r}")
        if self.form == "custom":
            vals = tuple(float(v) for v in self.values)
            if len(vals) == 0:
                raise ConfigError("custom schedule needs at least one value")
            if not all(np.isfinite(v) and v > 0 for v in vals):
                raise ConfigError("custom schedule values must be positive and finite")
            object.__setattr__(self, "values", vals)
        else:
            if not (np.isfinite(self.c) and self.c > 0):
                raise ConfigError("schedule scale c must be positive and finite")
            if not np.isfinite(self.p):
                raise ConfigError("schedule exponent p must be finite")

    @property
    def horizon(self) -> int | None:
        """Largest usable iteration count, or None when unbounded."""
        return len(self.values) if self.form == "custom" else None


def alpha(schedule: Schedule, k: int) -> float:
    """Step size alpha_k; k = -1 returns alpha_0 by convention."""
    k = int(k)
    if k < -1:
        raise ConstraintError(f"step index {k} out of range (k >= -1)")
    if k == -1:
        k = 0
    if schedule.form == "constant":
        return float(schedule.c)
    if schedule.form == "power-law":
        return float(schedule.c * (k + 1) ** (-schedule.p))
    if k >= len(schedule.values):
        raise ConstraintError(
            f"custom schedule has horizon {len(schedule.values)}; alpha_{k} undefined"
        )
    return schedule.values[k]


def alphas(schedule: Schedule, iterations: int) -> np.ndarray:
    """Vector (alpha_0, ..., alpha_{K-1})."""
    iterations = int(iterations)
    if iterations < 1:
        raise ConstraintError("iterations must be >= 1")
    if schedule.form == "constant":
        return np.full(iterations, float(schedule.c))
    if schedule.form == "power-law":
        ks = np.arange(1, iterations + 1, dtype=float)
        return schedule.c * ks ** (-schedule.p)
    if iterations > len(schedule.values):
        raise ConstraintError(
            f"custom schedule has horizon {len(schedule.values)} < {iterations}"
        )
    return np.asarray(schedule.values[:iterations], dtype=float)


@dataclass(frozen=True)
class ScheduleValidation:
    """Outcome of checking a schedule against the step-size conditions."""

    non_increasing: bool
    alpha0_ok: bool
    square_summable: bool | None
    step_over_k_vanishes: bool | None
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        """True when no decidable condition failed (None = unverifiable)."""
        return (
            self.non_increasing
            and self.alpha0_ok
            and self.square_summable is not False
            and self.step_over_k_vanishes is not False
        )


def validate_schedule(
    schedule: Schedule,
    l_smooth: float,
    b_prime: float,
    sin_alpha: float,
) -> ScheduleValidation:
    """Check the conditions a step-size sequence must satisfy for convergence:

    (i) alpha_k non-increasing, (ii) alpha_0 <= (1 - sin a)/(L B'),
    (iii) sum alpha_k^2 < infinity, (iv) 1/(k alpha_{k-1}) -> 0.

    Custom tables get surrogate checks over their horizon with a warning that
    tail conditions (iii)-(iv) are unverifiable from a finite table.
    """
    if not (np.isfinite(l_smooth) and l_smooth > 0):
        raise ConstraintError("l_smooth must be positive and finite")
    if not (np.isfinite(b_prime) and b_prime > 0):
        raise ConstraintError("b_prime must be positive and finite")
    if not (0.0 <= sin_alpha < 1.0):
        raise ConstraintError("sin_alpha must lie in [0, 1)")

    warnings: list[str] = []
    cap = (1.0 - sin_alpha) / (l_smooth * b_prime)
    alpha0 = alpha(schedule, 0)
    alpha0_ok = alpha0 <= cap * (1.0 + 1e-12)

    if schedule.form == "power-law":
        non_increasing = schedule.p >= 0
        square_summable = schedule.p > 0.5
        if schedule.p == 0.5:
            warnings.append(
                "p = 1/2 boundary: sum of squared steps diverges logarithmically; "
                "reported as a failed condition but the simulation is not blocked"
            )
        elif not square_summable:
            warnings.append("p <= 1/2: steps are not square-summable")
        step_over_k_vanishes = schedule.p < 1.0
        if not step_over_k_vanishes:
            warnings.append("p >= 1: 1/(k alpha_{k-1}) does not vanish")
    elif schedule.form == "constant":
        non_increasing = True
        square_summable = False
        warnings.append("constant steps are not square-summable")
        step_over_k_vanishes = True
    else:
        table = np.asarray(schedule.values)
        non_increasing = bool(np.all(np.diff(table) <= 1e-12 * np.abs(table[:-1])))
        square_summable = None
        step_over_k_vanishes = None
        warnings.append(
            "custom table: tail conditions (square-summability, vanishing "
            "1/(k alpha_{k-1})) are unverifiable beyond the table horizon"
        )

    return ScheduleValidation(
        non_increasing=non_increasing,
        alpha0_ok=bool(alpha0_ok),
        square_summable=square_summable,
        step_over_k_vanishes=step_over_k_vanishes,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True, eq=False)
class WeightingSequence:
    """Materialized W_{-1}, ..., W_{K-1}, kept in log space for large horizons.

    log_values[j] = log W_{j-1}; the linear-scale view may underflow to zero,
    the log-scale one never does.
    """

    schedule: Schedule
    l_smooth: float
    a_prime: float
    iterations: int
    log_values: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def value(self, k: int) -> float:
        return float(np.exp(self.log_value(k)))

    def log_value(self, k: int) -> float:
        k = int(k)
        if not (-1 <= k < self.iterations):
            raise ConstraintError(
                f"W_{k} not materialized (valid range -1..{self.iterations - 1})"
            )
        return float(self.log_values[k + 1])


def weighting_sequence(
    schedule: Schedule, l_smooth: float, a_prime: float, iterations: int
) -> WeightingSequence:
    """Materialize the weighting sequence for a non-increasing schedule.

    Computed by the recurrence in log space, which agrees with the direct
    product form wherever the latter is representable and stays finite far
    beyond the underflow point of the linear-scale recurrence.
    """
    iterations = int(iterations)
    if iterations < 1:
        raise ConstraintError("iterations must be >= 1")
    if l_smooth < 0 or a_prime < 0:
        raise ConstraintError("l_smooth and a_prime must be non-negative")
    steps = alphas(schedule, iterations)
    if np.any(np.diff(steps) > 1e-12 * np.abs(steps[:-1])):
        raise ConstraintError("weighting sequence requires a non-increasing schedule")
    prev = np.concatenate(([steps[0]], steps[:-1]))
    increments = np.log(steps) - np.log(prev) - np.log1p(l_smooth * a_prime * steps**2)
    log_values = np.concatenate(([0.0], np.cumsum(increments)))
    return WeightingSequence(
        schedule=schedule,
        l_smooth=float(l_smooth),
        a_prime=float(a_prime),
        iterations=iterations,
        log_values=log_values,
    )


def sample_iterate_index(
    weights: WeightingSequence, iterations: int, rng: np.random.Generator
) -> int:
    """Draw R_K with P(R_K = k) = W_k / sum_{i<K} W_i via inverse CDF.

    Normalization happens in log space so underflowed weights still sample
    correctly.
    """
    iterations = int(iterations)
    if not (1 <= iterations <= weights.iterations):
        raise ConstraintError(
            f"iterations must lie in 1..{weights.iterations}, got {iterations}"
        )
    logw = weights.log_values[1 : iterations + 1]
    scaled = np.exp(logw - logw.max())
    cdf = np.cumsum(scaled)
    cdf /= cdf[-1]
    k = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(k, iterations - 1)

"""Mackey-Glass series: generation, grid resampling, and noise corruption.

The delay equation q'(t) = a*q(t-tau)/(1 + q(t-tau)^E) - b*q(t) is integrated
with a fixed-step classical Runge-Kutta scheme; the delayed value is read off
a cubic Hermite interpolant of the already-computed solution (method of
steps). The dense solution is then resampled onto the uniform benchmark grid
and optionally corrupted with white Gaussian noise at a prescribed SNR.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import rng
from .errors import ConfigError, IntegrationDivergedError, OutOfDomainError

# Benchmark grid: 3500 samples of t in [50, 3000), transient t < 50 discarded.
DEFAULT_T_START = 50.0
DEFAULT_N_POINTS = 3500
DEFAULT_GRID_DT = 2950.0 / 3500.0

SNR_DISABLED = float("inf")

# Convention for the signal power used to calibrate noise, logged in output
# metadata: mean of q_n^2 over the series (not the variance).
SNR_POWER_CONVENTION = "mean-square"


@dataclass(frozen=True)
class MGParams:
    """Parameters of the delay equation and its fixed-step integration."""

    a: float = 0.2
    b: float = 0.1
    tau: float = 17.0
    exponent: float = 10.0
    history_value: float = 0.5
    t_end: float = 3000.0
    integrator_step: float = 0.01

    def __post_init__(self):
        if not (self.a >= 0 and self.b > 0 and self.tau > 0):
            raise ConfigError("require a >= 0, b > 0, tau > 0")
        if not (0 < self.integrator_step <= self.tau):
            raise ConfigError("require 0 < integrator_step <= tau")
        if not (self.t_end > 0 and self.exponent > 0):
            raise ConfigError("require t_end > 0 and exponent > 0")


@dataclass(frozen=True)
class Trajectory:
    """Dense fixed-step solution with knot derivatives for cubic resampling."""

    values: np.ndarray
    derivs: np.ndarray
    t_start: float
    dt: float

    @property
    def t_end(self) -> float:
        return self.t_start + (len(self.values) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t_start + np.arange(len(self.values)) * self.dt


@dataclass(frozen=True)
class MGSeries:
    """Uniformly sampled series q_n on the grid t_start + n*dt."""

    values: np.ndarray
    t_start: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ConfigError("series values must be a non-empty 1-d array")
        if not np.isfinite(self.values).all():
            raise ConfigError("series values must all be finite")
        if not self.dt > 0:
            raise ConfigError("series dt must be positive")

    @property
    def n_points(self) -> int:
        return len(self.values)

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n_points - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_points) * self.dt


@dataclass(frozen=True)
class NoisySpec:
    """White-noise corruption level; snr_db = +inf disables the noise."""

    snr_db: float
    noise_seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError("snr_db must be finite or +inf (disabled)")


def _production(p: np.ndarray, a: float, exponent: float) -> np.ndarray:
    """Delayed production term a*p/(1 + p^E)."""
    if float(exponent).is_integer():
        pe = p ** int(exponent)  # integer power is safe for negative p
    else:
        pe = p**exponent
    return a * p / (1.0 + pe)


def _hermite_eval(
    td: np.ndarray,
    q: np.ndarray,
    dq: np.ndarray,
    h: float,
    history_value: float,
    last_knot: int,
) -> np.ndarray:
    """Piecewise-cubic Hermite evaluation of the stored solution at times td.

    Times td <= 0 resolve to the constant pre-history; positive times use the
    interval [k, k+1] with k clamped to last_knot - 1, so a query landing
    exactly on the newest knot evaluates the polynomial at its right endpoint.
    """
    out = np.full(td.shape, history_value)
    pos = td > 0
    if not pos.any():
        return out
    tdp = td[pos]
    idx = np.minimum((tdp / h).astype(np.int64), last_knot - 1)
    theta = tdp / h - idx
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    out[pos] = (
        h00 * q[idx] + h10 * h * dq[idx] + h01 * q[idx + 1] + h11 * h * dq[idx + 1]
    )
    return out


def integrate_mg(params: MGParams) -> Trajectory:
    """Integrate the delay equation over [0, t_end] at the fixed step.

    The recursion within each chunk of at most tau/h steps is linear in q
    (the delayed term only reads earlier chunks), so whole chunks are
    advanced with vectorized arithmetic. Raises IntegrationDivergedError,
    naming the step, if a non-finite value appears.
    """
    h = params.integrator_step
    b = params.b
    n_steps = max(1, int(round(params.t_end / h)))
    chunk = max(1, int(params.tau / h))

    # RK4 for q' = G(t) - b*q with G known from the delayed interpolant:
    # q_{n+1} = A*q_n + (h/6)*(c1*G(t) + c2*G(t+h/2) + G(t+h)).
    r = b * h
    amp = 1 - r + r**2 / 2 - r**3 / 6 + r**4 / 24
    c1 = 1 - r + r**2 / 2 - r**3 / 4
    c2 = 4 - 2 * r + r**2 / 2

    q = np.empty(n_steps + 1)
    dq = np.empty(n_steps + 1)
    q[0] = params.history_value
    dq[0] = (
        float(_production(np.array([params.history_value]), params.a, params.exponent)[0])
        - b * params.history_value
    )

    for c in range(0, n_steps, chunk):
        m = min(chunk, n_steps - c)
        td = (c + np.arange(m)) * h - params.tau

        def delayed(stage_times):
            # Clamp to the newest computed knot; rounding in tau/h can push a
            # stage time past it by one ulp.
            clamped = np.minimum(stage_times, c * h)
            return _production(
                _hermite_eval(clamped, q, dq, h, params.history_value, max(c, 1)),
                params.a,
                params.exponent,
            )

        g1 = delayed(td)
        g2 = delayed(td + h / 2)
        g3 = delayed(td + h)
        forcing = (h / 6) * (c1 * g1 + c2 * g2 + g3)
        # q[c+j+1] = amp^(j+1) * (q[c] + sum_{i<=j} forcing_i * amp^-(i+1))
        powers = amp ** np.arange(1, m + 1)
        partial = np.cumsum(forcing / powers)
        new = powers * (q[c] + partial)
        bad = ~np.isfinite(new)
        if bad.any():
            raise IntegrationDivergedError(step_index=c + int(np.argmax(bad)) + 1)
        q[c + 1 : c + 1 + m] = new
        dq[c + 1 : c + 1 + m] = g3 - b * new

    return Trajectory(values=q, derivs=dq, t_start=0.0, dt=h)


def resample_to_grid(
    trajectory: Trajectory | MGSeries,
    t_start: float = DEFAULT_T_START,
    n_points: int = DEFAULT_N_POINTS,
    dt: float = DEFAULT_GRID_DT,
) -> MGSeries:
    """Cubic interpolation of a solution onto a uniform grid.

    A Trajectory is interpolated with its stored derivatives (Hermite); an
    already-uniform MGSeries falls back to a standard cubic spline, so
    resampling a series onto its own grid reproduces it.
    """
    if n_points < 1 or dt <= 0:
        raise ConfigError("grid requires n_points >= 1 and dt > 0")
    t_last = t_start + (n_points - 1) * dt
    slack = 1e-9 * max(1.0, abs(trajectory.t_end))
    if t_start < trajectory.t_start - slack or t_last > trajectory.t_end + slack:
        raise OutOfDomainError(
            f"grid [{t_start}, {t_last}] exceeds trajectory domain "
            f"[{trajectory.t_start}, {trajectory.t_end}]"
        )
    xs = trajectory.t_start + np.arange(len(trajectory.values)) * trajectory.dt
    if isinstance(trajectory, Trajectory):
        interp = CubicHermiteSpline(xs, trajectory.values, trajectory.derivs)
    else:
        interp = CubicSpline(xs, trajectory.values)
    grid = t_start + np.arange(n_points) * dt
    return MGSeries(values=interp(grid), t_start=t_start, dt=dt)


@functools.lru_cache(maxsize=8)
def canonical_series(
    params: MGParams = MGParams(),
    t_start: float = DEFAULT_T_START,
    n_points: int = DEFAULT_N_POINTS,
    dt: float = DEFAULT_GRID_DT,
) -> MGSeries:
    """Integrate + resample, cached: sweeps reuse one clean series per process."""
    return resample_to_grid(integrate_mg(params), t_start, n_points, dt)


def signal_power(series: MGSeries) -> float:
    """Mean-square power of the series (the SNR reference, see module doc)."""
    return float(np.mean(series.values**2))


def add_awgn(series: MGSeries, spec: NoisySpec) -> MGSeries:
    """Add i.i.d. zero-mean Gaussian noise calibrated to spec.snr_db.

    The noise variance is signal_power / 10^(snr_db/10); draws come from the
    stream addressed by the noise seed, so the result is deterministic.
    """
    if spec.snr_db == SNR_DISABLED:
        return series
    variance = signal_power(series) / 10.0 ** (spec.snr_db / 10.0)
    draws = rng.stream(spec.noise_seed, "awgn").standard_normal(series.n_points)
    return MGSeries(
        values=series.values + math.sqrt(variance) * draws,
        t_start=series.t_start,
        dt=series.dt,
    )


def write_series_csv(path, series: MGSeries, noisy: MGSeries | None = None) -> None:
    """Write `t,q` rows (plus `q_noisy` when given) at 17 significant digits."""
    times = series.times()
    with open(path, "w", newline="") as fh:
        if noisy is None:
            fh.write("t,q\n")
            for t, v in zip(times, series.values):
                fh.write(f"{t:.17g},{v:.17g}\n")
        else:
            if noisy.n_points != series.n_points:
                raise ConfigError("clean and noisy series must share a grid")
            fh.write("t,q,q_noisy\n")
            for t, v, w in zip(times, series.values, noisy.values):
                fh.write(f"{t:.17g},{v:.17g},{w:.17g}\n")

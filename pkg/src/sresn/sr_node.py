"""Bistable stochastic-resonance nodes used as dynamic activations.

Each neuron is an overdamped particle in the double-well potential
U0(x) = -alpha*x^2/2 + beta*x^4/4, tilted by its weighted input s. One
explicit Euler step of the stochastic ODE per network step advances the
persistent internal state, and the new state is the activation output.
The noise term enters as noise_amp*sigma*dt (the discrete-map convention);
an optional flag switches to the sqrt(dt) diffusion scaling instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mackey_glass
from .errors import ConfigError, OutOfDomainError, StateDivergedError
from .formatting import fmt_float

# States beyond this magnitude abort the run instead of propagating NaN.
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class SRParams:
    """Node hyperparameters.

    beta defaults to alpha, which turns the drift into alpha*(xi - xi^3) and
    puts the stable states at +-1; keeping it separate preserves the general
    double-well form.
    """

    alpha: float = 0.01
    beta: float | None = None
    noise_amp: float = 0.0
    dt: float = mackey_glass.DEFAULT_GRID_DT
    sde_scaling: bool = False

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", self.alpha)
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("require alpha >= 0 and beta >= 0")
        if self.noise_amp < 0:
            raise ConfigError("require noise_amp >= 0")
        if not self.dt > 0:
            raise ConfigError("require dt > 0")

    @property
    def stationary_points(self) -> tuple[float, float]:
        """The two stable well minima +-sqrt(alpha/beta)."""
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("stationary points require alpha > 0 and beta > 0")
        xs = math.sqrt(self.alpha / self.beta)
        return (-xs, xs)

    @property
    def barrier_height(self) -> float:
        """Well depth alpha^2/(4*beta) separating the two minima."""
        if self.beta <= 0:
            raise ConfigError("barrier requires beta > 0")
        return self.alpha**2 / (4.0 * self.beta)


def potential(x, params: SRParams):
    """Stationary double-well potential U0(x) = -alpha*x^2/2 + beta*x^4/4."""
    x = np.asarray(x, dtype=float)
    value = -params.alpha * x**2 / 2.0 + params.beta * x**4 / 4.0
    return float(value) if value.ndim == 0 else value


def tilted_potential(x, s, params: SRParams):
    """Input-tilted landscape U0(x) - x*s; positive s lowers the right well."""
    x = np.asarray(x, dtype=float)
    value = potential(x, params) - x * np.asarray(s, dtype=float)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class ProbeRecord:
    """Scatter data captured at one evolution step: drive vs. state update."""

    step: int
    drive: np.ndarray
    xi_before: np.ndarray
    xi_after: np.ndarray


class TransferProbe:
    """Records (drive, output) pairs at selected 1-based evolution steps."""

    def __init__(self, steps):
        self.steps = frozenset(int(s) for s in steps)
        if any(s < 1 for s in self.steps):
            raise ConfigError("probe steps are 1-based and must be >= 1")
        self.records: dict[int, ProbeRecord] = {}


@dataclass
class SRBank:
    """Per-neuron internal states plus the shared node parameters.

    A bank is owned by a single reservoir run; distinct banks may be stepped
    concurrently.
    """

    xi: np.ndarray
    params: SRParams
    step_index: int = 0
    probe: TransferProbe | None = None


def new_bank(
    n: int,
    params: SRParams,
    init_stream: np.random.Generator,
    probe: TransferProbe | None = None,
) -> SRBank:
    """Bank of n nodes with standard-normal initial states."""
    return SRBank(xi=init_stream.standard_normal(n), params=params, probe=probe)


def sr_step(bank: SRBank, s: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Advance every node one Euler step driven by s; returns the new states.

    xi' = xi + (alpha*xi - beta*xi^3 + noise_amp*noise)*dt + s*dt
    (or noise_amp*noise*sqrt(dt) under the sde_scaling flag). Mutates the
    bank, increments its step counter, and feeds the probe if one is set.
    """
    p = bank.params
    xi = bank.xi
    s = np.asarray(s, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if s.shape != xi.shape or noise.shape != xi.shape:
        raise ValueError("drive and noise must match the bank size")

    noise_step = p.dt if not p.sde_scaling else math.sqrt(p.dt)
    drift = (p.alpha * xi - p.beta * xi**3) * p.dt
    new = xi + drift + (p.noise_amp * noise_step) * noise + s * p.dt

    step = bank.step_index + 1
    bad = ~(np.isfinite(new) & (np.abs(new) <= DIVERGENCE_LIMIT))
    if bad.any():
        raise StateDivergedError(step_index=step, neuron_index=int(np.argmax(bad)))

    if bank.probe is not None and step in bank.probe.steps:
        bank.probe.records[step] = ProbeRecord(
            step=step, drive=s.copy(), xi_before=xi.copy(), xi_after=new.copy()
        )
    bank.xi = new
    bank.step_index = step
    return new


def transfer_probe(probe: TransferProbe, steps=None) -> list[ProbeRecord]:
    """Collected records, sorted by step; errors on steps never reached."""
    requested = sorted(probe.steps) if steps is None else sorted(int(s) for s in steps)
    out = []
    for step in requested:
        if step not in probe.records:
            raise OutOfDomainError(
                f"step {step} was not recorded (run too short or not requested)"
            )
        out.append(probe.records[step])
    return out


def write_probe_csv(path, records: list[ProbeRecord]) -> None:
    """Write probe scatter data as `step,neuron,s,xi_next` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("step,neuron,s,xi_next\n")
        for rec in records:
            for i, (s, x) in enumerate(zip(rec.drive, rec.xi_after)):
                fh.write(f"{rec.step},{i},{fmt_float(s)},{fmt_float(x)}\n")

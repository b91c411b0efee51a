"""Echo state network construction, teacher forcing, and free-running mode.

The recurrent weight matrix is sparse with a prescribed number of nonzeros
and is rescaled to a target spectral radius. The activation is either the
classical static tanh or a bank of stochastic-resonance nodes whose internal
states ARE the network state. The output-feedback update is

    x_{n+1} = f(W x_n + W_back y_n)

with y clamped to the teacher during training and fed back from the readout
while running freely. The input map W_in is allocated for completeness but
the generative Mackey-Glass task never drives it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg

from . import rng, sr_node
from .errors import ConfigError, NumericalFailureError, StateDivergedError
from .sr_node import SRBank, SRParams, TransferProbe

ACTIVATION_SIGMOID = "sigmoid"
ACTIVATION_SR = "sr"

DEFAULT_FEED_LEN = 3000
DEFAULT_WASHOUT = 1000


@dataclass(frozen=True)
class ReservoirConfig:
    """Construction parameters; the seed pins every random draw."""

    n_neurons: int = 200
    connectivity: float = 0.01
    spectral_radius: float = 0.8
    w_back_scale: float = 1.0
    activation: str = ACTIVATION_SR
    sr_params: SRParams = SRParams()
    sigmoid_kind: str = "tanh"  # or "logistic"
    seed: int = 0

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ConfigError("n_neurons must be >= 1")
        if not (0 < self.connectivity <= 1):
            raise ConfigError("connectivity must be in (0, 1]")
        if not (0 < self.spectral_radius < 1):
            raise ConfigError("spectral_radius must be in (0, 1)")
        if self.activation not in (ACTIVATION_SIGMOID, ACTIVATION_SR):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.sigmoid_kind not in ("tanh", "logistic"):
            raise ConfigError(f"unknown sigmoid_kind {self.sigmoid_kind!r}")

    @property
    def nnz(self) -> int:
        return math.ceil(self.connectivity * self.n_neurons**2)


@dataclass(frozen=True)
class StateMatrix:
    """Harvested teacher-forced states and their aligned targets."""

    rows: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.rows.shape[0] != self.targets.shape[0]:
            raise ConfigError("state rows and targets must align")


@dataclass
class OpCounter:
    """Scalar-multiplication tally for one instrumented evolution step."""

    multiplications: int = 0

    def add(self, count: int) -> None:
        self.multiplications += count


def activation_sigmoid(v: np.ndarray) -> np.ndarray:
    """The classical static activation (tanh; see ReservoirConfig for the
    logistic switch)."""
    return np.tanh(v)


def _activation_logistic(v: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-v))


def complexity_formula(n: int, activation: str) -> int:
    """Multiplications per evolution step, counting W.x as a dense product.

    The static activation is table-lookup (free), so the classical network
    costs N^2+3N (W_in.u, W.x, W_back.y, W_out.x); the SR node adds the
    s*dt product for N^2+4N.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if activation == ACTIVATION_SIGMOID:
        return n * n + 3 * n
    if activation == ACTIVATION_SR:
        return n * n + 4 * n
    raise ConfigError(f"unknown activation {activation!r}")


def _spectral_radius_arpack(w: sparse.csr_matrix, v0: np.ndarray) -> float:
    vals = splinalg.eigs(
        w, k=1, which="LM", v0=v0, return_eigenvectors=False, maxiter=50 * w.shape[0]
    )
    return float(abs(vals[0]))


def spectral_radius(w, v0: np.ndarray | None = None) -> float:
    """Largest eigenvalue magnitude; sparse path with a dense fallback."""
    n = w.shape[0]
    dense = w.toarray() if sparse.issparse(w) else np.asarray(w)
    if n <= 64 or not sparse.issparse(w):
        return float(np.max(np.abs(np.linalg.eigvals(dense))))
    try:
        return _spectral_radius_arpack(w, v0 if v0 is not None else np.ones(n))
    except (splinalg.ArpackError, splinalg.ArpackNoConvergence):
        return float(np.max(np.abs(np.linalg.eigvals(dense))))


class Reservoir:
    """One network instance: fixed weights plus the evolving run state."""

    def __init__(
        self,
        config: ReservoirConfig,
        w: sparse.csr_matrix,
        w_in: np.ndarray,
        w_back: np.ndarray,
        bank: SRBank | None,
        noise_stream: np.random.Generator,
    ):
        self.config = config
        self.w = w
        self.w_in = w_in
        self.w_back = w_back
        self.bank = bank
        self._noise = noise_stream
        self.x = bank.xi.copy() if bank is not None else np.zeros(config.n_neurons)
        self.y_prev = 0.0
        self.step_index = 0

    @property
    def n_neurons(self) -> int:
        return self.config.n_neurons

    @property
    def nnz(self) -> int:
        return self.w.nnz

    def attach_probe(self, probe: TransferProbe) -> None:
        if self.bank is None:
            raise ConfigError("transfer probes require the sr activation")
        self.bank.probe = probe

    def _static_activation(self, drive: np.ndarray) -> np.ndarray:
        if self.config.sigmoid_kind == "tanh":
            return activation_sigmoid(drive)
        return _activation_logistic(drive)

    def step(self, y: float) -> np.ndarray:
        """Advance one update x <- f(W x + W_back y); returns the new state."""
        drive = self.w @ self.x + self.w_back * y
        if self.bank is not None:
            noise = self._noise.standard_normal(self.n_neurons)
            x = sr_node.sr_step(self.bank, drive, noise)
        else:
            x = self._static_activation(drive)
            if not np.isfinite(x).all():
                raise StateDivergedError(step_index=self.step_index + 1)
        self.x = x
        self.y_prev = float(y)
        self.step_index += 1
        return x


def build_reservoir(config: ReservoirConfig) -> Reservoir:
    """Draw, sparsify, and rescale the weights; deterministic under the seed.

    A degenerate draw whose spectral radius is (numerically) zero is redrawn
    from the next substream, up to 10 attempts.
    """
    n = config.n_neurons
    nnz = config.nnz
    w_scaled = None
    for attempt in range(10):
        gen = rng.stream(config.seed, "weights", attempt)
        positions = gen.choice(n * n, size=nnz, replace=False)
        values = gen.uniform(-1.0, 1.0, nnz)
        w = sparse.csr_matrix(
            (values, (positions // n, positions % n)), shape=(n, n)
        )
        rho = spectral_radius(w, v0=gen.standard_normal(n))
        if rho > 1e-12:
            w_scaled = w * (config.spectral_radius / rho)
            break
    if w_scaled is None:
        raise NumericalFailureError(
            "reservoir matrix had zero spectral radius in 10 consecutive draws"
        )

    w_in = rng.stream(config.seed, "w_in").uniform(-1.0, 1.0, n)
    w_back = rng.stream(config.seed, "w_back").uniform(-1.0, 1.0, n) * config.w_back_scale

    bank = None
    if config.activation == ACTIVATION_SR:
        bank = sr_node.new_bank(n, config.sr_params, rng.stream(config.seed, "xi"))
    noise_stream = rng.stream(config.seed, "sr-noise")
    return Reservoir(config, w_scaled, w_in, w_back, bank, noise_stream)


def teacher_forced_run(
    res: Reservoir,
    teacher,
    feed_len: int = DEFAULT_FEED_LEN,
    washout: int = DEFAULT_WASHOUT,
) -> StateMatrix:
    """Drive the network with the teacher signal and harvest states.

    The state reached after consuming teacher[k-1] is paired with target
    teacher[k]; rows washout..feed_len-1 are kept, so the default call
    returns feed_len - washout = 2000 rows and the final state (whose target
    would be the first evaluation sample) never enters training.
    """
    teacher = teacher.values if hasattr(teacher, "values") else np.asarray(teacher, float)
    if feed_len > len(teacher):
        raise ConfigError("feed_len exceeds teacher length")
    if not 0 <= washout < feed_len:
        raise ConfigError("washout must satisfy 0 <= washout < feed_len")

    n_rows = feed_len - washout
    rows = np.empty((n_rows, res.n_neurons))
    targets = np.empty(n_rows)
    for k in range(1, feed_len + 1):
        x = res.step(teacher[k - 1])
        if washout <= k <= feed_len - 1:
            rows[k - washout] = x
            targets[k - washout] = teacher[k]
    return StateMatrix(rows=rows, targets=targets)


def free_run(res: Reservoir, trained, n_steps: int = 100) -> np.ndarray:
    """Let the network run on its own readout feedback for n_steps outputs.

    The first prediction is the readout of the state left by the teacher-
    forced run; each subsequent state consumes the previous prediction.
    """
    w_out = trained.w_out if hasattr(trained, "w_out") else np.asarray(trained, float)
    preds = np.empty(n_steps)
    for i in range(n_steps):
        y = float(w_out @ res.x)
        if not math.isfinite(y) or abs(y) > 1e8:
            raise StateDivergedError(step_index=res.step_index + 1)
        preds[i] = y
        res.step(y)
    return preds


def counted_step(
    res: Reservoir,
    y: float,
    u: float = 0.0,
    w_out: np.ndarray | None = None,
) -> tuple[np.ndarray, OpCounter]:
    """One evolution step through an instrumented multiplication count.

    Counts the dense-equivalent products W_in*u (N), W.x (N^2), W_back*y (N)
    and the readout W_out.x (N), plus s*dt (N) inside the SR node; the SR
    drift and noise terms are table lookups in the reference accounting and
    the static activation is free. The sparse W is still used for the actual
    arithmetic.
    """
    counter = OpCounter()
    n = res.n_neurons
    in_part = res.w_in * u
    counter.add(n)
    recur = res.w @ res.x
    counter.add(n * n)
    back = res.w_back * y
    counter.add(n)
    drive = in_part + recur + back

    if res.bank is not None:
        counter.add(n)  # s*dt product inside the node update
        noise = res._noise.standard_normal(n)
        x = sr_node.sr_step(res.bank, drive, noise)
    else:
        x = res._static_activation(drive)
    res.x = x
    res.y_prev = float(y)
    res.step_index += 1

    if w_out is None:
        w_out = np.zeros(n)
    _ = w_out @ x
    counter.add(n)
    return x, counter


def snapshot_dict(res: Reservoir, w_out: np.ndarray | None = None) -> dict:
    """Self-describing JSON-ready snapshot for exact run replay."""
    coo = res.w.tocoo()
    cfg = res.config
    snap = {
        "format": "sresn-reservoir-snapshot-v1",
        "config": {
            "n_neurons": cfg.n_neurons,
            "connectivity": cfg.connectivity,
            "spectral_radius": cfg.spectral_radius,
            "w_back_scale": cfg.w_back_scale,
            "activation": cfg.activation,
            "sigmoid_kind": cfg.sigmoid_kind,
            "seed": cfg.seed,
            "sr_params": {
                "alpha": cfg.sr_params.alpha,
                "beta": cfg.sr_params.beta,
                "noise_amp": cfg.sr_params.noise_amp,
                "dt": cfg.sr_params.dt,
                "sde_scaling": cfg.sr_params.sde_scaling,
            },
        },
        "w": {
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "values": coo.data.tolist(),
        },
        "w_in": res.w_in.tolist(),
        "w_back": res.w_back.tolist(),
        "x": res.x.tolist(),
        "y_prev": res.y_prev,
        "step_index": res.step_index,
        "bank": None,
        "noise_state": _philox_state_to_json(res._noise),
        "w_out": None if w_out is None else np.asarray(w_out, float).tolist(),
    }
    if res.bank is not None:
        snap["bank"] = {"xi": res.bank.xi.tolist(), "step_index": res.bank.step_index}
    return snap


def reservoir_from_snapshot(snap: dict) -> tuple[Reservoir, np.ndarray | None]:
    """Rebuild a reservoir (and optional readout) from snapshot_dict output."""
    if snap.get("format") != "sresn-reservoir-snapshot-v1":
        raise ConfigError("not a reservoir snapshot")
    c = snap["config"]
    config = ReservoirConfig(
        n_neurons=c["n_neurons"],
        connectivity=c["connectivity"],
        spectral_radius=c["spectral_radius"],
        w_back_scale=c["w_back_scale"],
        activation=c["activation"],
        sigmoid_kind=c["sigmoid_kind"],
        seed=c["seed"],
        sr_params=SRParams(**c["sr_params"]),
    )
    n = config.n_neurons
    w = sparse.csr_matrix(
        (snap["w"]["values"], (snap["w"]["rows"], snap["w"]["cols"])), shape=(n, n)
    )
    bank = None
    if snap["bank"] is not None:
        bank = SRBank(
            xi=np.asarray(snap["bank"]["xi"], float),
            params=config.sr_params,
            step_index=snap["bank"]["step_index"],
        )
    noise_stream = _philox_from_json(snap["noise_state"])
    res = Reservoir(
        config,
        w,
        np.asarray(snap["w_in"], float),
        np.asarray(snap["w_back"], float),
        bank,
        noise_stream,
    )
    res.x = np.asarray(snap["x"], float)
    res.y_prev = snap["y_prev"]
    res.step_index = snap["step_index"]
    w_out = None if snap["w_out"] is None else np.asarray(snap["w_out"], float)
    return res, w_out


def save_snapshot(path, res: Reservoir, w_out: np.ndarray | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(snapshot_dict(res, w_out), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_snapshot(path) -> tuple[Reservoir, np.ndarray | None]:
    with open(path) as fh:
        return reservoir_from_snapshot(json.load(fh))


def _philox_state_to_json(gen: np.random.Generator) -> dict:
    state = gen.bit_generator.state
    return {
        "counter": state["state"]["counter"].tolist(),
        "key": state["state"]["key"].tolist(),
        "buffer": state["buffer"].tolist(),
        "buffer_pos": int(state["buffer_pos"]),
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def _philox_from_json(d: dict) -> np.random.Generator:
    bitgen = np.random.Philox()
    bitgen.state = {
        "bit_generator": "Philox",
        "state": {
            "counter": np.array(d["counter"], dtype=np.uint64),
            "key": np.array(d["key"], dtype=np.uint64),
        },
        "buffer": np.array(d["buffer"], dtype=np.uint64),
        "buffer_pos": d["buffer_pos"],
        "has_uint32": d["has_uint32"],
        "uinteger": d["uinteger"],
    }
    return np.random.Generator(bitgen)

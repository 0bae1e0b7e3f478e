"""Thermal-comfort prediction.

An analytic comfort oracle (the Fanger heat-balance model, ISO 7730
lineage) stands in for human votes on the standard seven-point scale
(-3 cold .. +3 hot).  A small sigmoid network is trained on oracle-labelled
(and optionally noise-corrupted) samples under a sum-squared-error cost
with an L2 penalty on the weights, and the trained network is what the
controllers consult at run time: comfort(T_in, H_in) with the remaining
four personal/environmental factors held at documented defaults.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nets import (
    DenseNet,
    adam_init,
    adam_step,
    forward_batch,
    format_dense_net,
    gradient_batch,
    init_dense_net,
    parse_dense_net,
)

# Valid input ranges for the comfort oracle (air temp also bounds mean
# radiant temp; both are dry-bulb-like quantities here).
AIR_TEMP_RANGE = (0.0, 50.0)
HUMIDITY_RANGE = (0.0, 100.0)
AIR_SPEED_RANGE = (0.0, 2.0)
MET_RANGE = (0.5, 4.0)
CLO_RANGE = (0.0, 2.0)

# Fixed affine input scaling: scaled = (x - offset) / scale maps each
# feature's valid range onto [-1, 1].
FEATURE_SCALING = (
    (25.0, 25.0),  # air temperature
    (50.0, 50.0),  # relative humidity
    (25.0, 25.0),  # mean radiant temperature
    (1.0, 1.0),  # air speed
    (2.25, 1.75),  # metabolic rate
    (1.0, 1.0),  # clothing insulation
)

FEATURE_NAMES = ("air_temp", "rel_humidity", "mean_radiant_temp", "air_speed", "met", "clo")
CSV_HEADER = "air_temp,rel_humidity,mean_radiant_temp,air_speed,met,clo,vote"


class DatasetError(ValueError):
    """Raised for unreadable dataset files or rows violating sample invariants."""


class ComfortConvergenceError(RuntimeError):
    """Clothing surface temperature iteration failed to settle."""


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not (lo <= value <= hi) or not math.isfinite(value):
        raise ValueError(f"{name}={value!r} outside valid range [{lo}, {hi}]")


def pmv_oracle(
    air_temp: float,
    rel_humidity: float,
    mean_radiant_temp: float,
    air_speed: float,
    met: float,
    clo: float,
) -> float:
    """Predicted comfort vote from the steady-state body heat balance.

    The clothing surface temperature is solved iteratively (interval-halving
    on the normalized surface temperature) to an absolute tolerance of
    1e-5 degC, capped at 300 iterations.  The result is clamped to
    [-3.5, 3.5].
    """
    _check_range("air_temp", air_temp, *AIR_TEMP_RANGE)
    _check_range("rel_humidity", rel_humidity, *HUMIDITY_RANGE)
    _check_range("mean_radiant_temp", mean_radiant_temp, *AIR_TEMP_RANGE)
    _check_range("air_speed", air_speed, *AIR_SPEED_RANGE)
    _check_range("met", met, *MET_RANGE)
    _check_range("clo", clo, *CLO_RANGE)

    pa = rel_humidity * 10.0 * math.exp(16.6536 - 4030.183 / (air_temp + 235.0))
    icl = 0.155 * clo  # m2K/W
    m = met * 58.15  # metabolic power, W/m2 (no external work)
    if icl <= 0.078:
        fcl = 1.0 + 1.29 * icl
    else:
        fcl = 1.05 + 0.645 * icl
    hcf = 12.1 * math.sqrt(air_speed)
    taa = air_temp + 273.0
    tra = mean_radiant_temp + 273.0

    # Solve for the clothing surface temperature (tracked as tcl/100 in K).
    tcla = taa + (35.5 - air_temp) / (3.5 * icl + 0.1)
    p1 = icl * fcl
    p2 = p1 * 3.96
    p3 = p1 * 100.0
    p4 = p1 * taa
    p5 = 308.7 - 0.028 * m + p2 * (tra / 100.0) ** 4
    xn = tcla / 100.0
    xf = tcla / 50.0
    eps = 1e-7  # 1e-5 degC on the /100 scale
    hc = hcf
    n = 0
    while abs(xn - xf) > eps:
        xf = (xf + xn) / 2.0
        hcn = 2.38 * abs(100.0 * xf - taa) ** 0.25
        hc = max(hcf, hcn)
        xn = (p5 + p4 * hc - p2 * xf**4) / (100.0 + p3 * hc)
        n += 1
        if n > 300:
            raise ComfortConvergenceError(
                f"surface temperature iteration did not converge: {air_temp=}, {air_speed=}"
            )
    tcl = 100.0 * xn - 273.0

    # Heat loss components, W/m2.
    hl1 = 3.05e-3 * (5733.0 - 6.99 * m - pa)  # skin diffusion
    hl2 = 0.42 * (m - 58.15) if m > 58.15 else 0.0  # sweating
    hl3 = 1.7e-5 * m * (5867.0 - pa)  # latent respiration
    hl4 = 0.0014 * m * (34.0 - air_temp)  # dry respiration
    hl5 = 3.96 * fcl * (xn**4 - (tra / 100.0) ** 4)  # radiation
    hl6 = fcl * hc * (tcl - air_temp)  # convection

    ts = 0.303 * math.exp(-0.036 * m) + 0.028
    pmv = ts * (m - hl1 - hl2 - hl3 - hl4 - hl5 - hl6)
    return min(3.5, max(-3.5, pmv))


@dataclass
class ComfortSample:
    """One labelled observation: six environment/personal features and a vote."""

    air_temp: float
    rel_humidity: float
    mean_radiant_temp: float
    air_speed: float
    met: float
    clo: float
    vote: float

    def features(self) -> tuple[float, ...]:
        return (
            self.air_temp,
            self.rel_humidity,
            self.mean_radiant_temp,
            self.air_speed,
            self.met,
            self.clo,
        )

    def problem(self) -> str | None:
        """Describe the first violated invariant, or None if the sample is valid."""
        values = self.features() + (self.vote,)
        if not all(math.isfinite(v) for v in values):
            return "non-finite field"
        if not -3.0 <= self.vote <= 3.0:
            return f"vote {self.vote} outside [-3, 3]"
        if not 0.0 <= self.rel_humidity <= 100.0:
            return f"rel_humidity {self.rel_humidity} outside [0, 100]"
        if self.air_speed < 0.0:
            return f"air_speed {self.air_speed} negative"
        if self.met <= 0.0:
            return f"met {self.met} not positive"
        if self.clo < 0.0:
            return f"clo {self.clo} negative"
        return None


@dataclass
class ComfortDefaults:
    """Values assumed for the factors the controller does not observe.

    mean_radiant_temp=None means "equal to the indoor air temperature",
    the usual assumption for an interior zone without strong radiant
    asymmetry.  The rest are sedentary office defaults.
    """

    mean_radiant_temp: float | None = None
    air_speed: float = 0.1
    met: float = 1.2
    clo: float = 0.5


@dataclass
class GridSpec:
    """Cartesian grid over the oracle's input space.

    mean_radiant_temp=None ties the radiant temperature to the air
    temperature instead of adding a grid axis.
    """

    air_temp: Sequence[float]
    rel_humidity: Sequence[float]
    mean_radiant_temp: Sequence[float] | None = None
    air_speed: Sequence[float] = (0.1,)
    met: Sequence[float] = (1.2,)
    clo: Sequence[float] = (0.5,)


def generate_dataset(grid: GridSpec, noise_sigma: float, seed: int) -> list[ComfortSample]:
    """Label every grid point with the oracle plus Gaussian vote noise.

    Votes are clamped to the reporting scale [-3, 3].  Deterministic for a
    given seed.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    mrt_axis = [None] if grid.mean_radiant_temp is None else list(grid.mean_radiant_temp)
    axes = (list(grid.air_temp), list(grid.rel_humidity), mrt_axis,
            list(grid.air_speed), list(grid.met), list(grid.clo))
    if any(len(a) == 0 for a in axes):
        raise ValueError("empty grid axis")
    rng = np.random.default_rng(seed)
    samples = []
    for t, rh, mrt, v, met, clo in itertools.product(*axes):
        mrt_val = t if mrt is None else mrt
        vote = pmv_oracle(t, rh, mrt_val, v, met, clo) + rng.normal(0.0, noise_sigma)
        samples.append(
            ComfortSample(t, rh, mrt_val, v, met, clo, min(3.0, max(-3.0, float(vote))))
        )
    return samples


def save_dataset(samples: Sequence[ComfortSample], path) -> None:
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for s in samples:
            f.write(",".join(repr(float(v)) for v in s.features() + (s.vote,)) + "\n")


def load_dataset(path) -> list[ComfortSample]:
    """Read a comfort CSV, rejecting malformed or invariant-violating rows.

    Error messages carry the 1-based physical line number of the offending
    row so bad data can be located directly.
    """
    if not os.path.exists(path):
        raise DatasetError(f"no such dataset file: {path}")
    samples = []
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise DatasetError(f"line 1: bad header {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise DatasetError(f"line {lineno}: expected 7 fields, got {len(parts)}")
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise DatasetError(f"line {lineno}: unparseable number in {line!r}") from None
            sample = ComfortSample(*values)
            problem = sample.problem()
            if problem is not None:
                raise DatasetError(f"line {lineno}: {problem}")
            samples.append(sample)
    return samples


@dataclass
class ComfortModel:
    """Trained comfort predictor: a 6-input net plus its fixed input scaling."""

    net: DenseNet
    input_scaling: tuple[tuple[float, float], ...] = FEATURE_SCALING

    def __post_init__(self):
        if len(self.net.layer_sizes) != 4 or self.net.layer_sizes[0] != 6:
            raise ValueError("comfort net must be 6 -> h1 -> h2 -> 1")
        if self.net.layer_sizes[-1] != 1:
            raise ValueError("comfort net must have a single output")
        if len(self.input_scaling) != 6:
            raise ValueError("need one (offset, scale) pair per feature")


def _scale_features(model: ComfortModel, X: np.ndarray) -> np.ndarray:
    offsets = np.array([p[0] for p in model.input_scaling])
    scales = np.array([p[1] for p in model.input_scaling])
    return (X - offsets) / scales


def _predict_scaled(model: ComfortModel, X: np.ndarray) -> np.ndarray:
    out = forward_batch(model.net, _scale_features(model, X))[:, 0]
    return np.clip(out, -3.0, 3.0)


@dataclass
class TrainResult:
    model: ComfortModel
    cost_curve: list[float]
    best_epoch: int
    heldout_mse: float


def train_comfort_model(
    samples: Sequence[ComfortSample],
    alpha1: float = 1.0,
    alpha2: float = 1e-4,
    epochs: int = 2000,
    seed: int = 0,
    hidden: tuple[int, int] = (32, 32),
    learning_rate: float = 0.01,
) -> TrainResult:
    """Fit the comfort net by full-batch Adam on the regularized cost.

    Cost = alpha1 * sum of squared vote errors (training split)
         + alpha2 * sum of squared weights (biases exempt).

    Samples are shuffled with the seed, split 80/20 into train/held-out,
    and the returned model is the snapshot from the epoch with the lowest
    held-out MSE.  The per-epoch cost curve covers the training split.
    """
    if len(samples) < 10:
        raise ValueError(f"need at least 10 samples, got {len(samples)}")
    if alpha1 <= 0 and alpha2 <= 0:
        raise ValueError("at least one cost term must be active")
    if alpha1 < 0 or alpha2 < 0:
        raise ValueError("alpha1 and alpha2 must be non-negative")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_test = max(1, round(0.2 * len(samples)))
    test_idx, train_idx = order[:n_test], order[n_test:]
    if len(train_idx) == 0:
        raise ValueError("empty training split")

    X = np.array([samples[i].features() for i in range(len(samples))], dtype=float)
    y = np.array([samples[i].vote for i in range(len(samples))], dtype=float)
    model = ComfortModel(
        init_dense_net([6, hidden[0], hidden[1], 1], ["sigmoid", "sigmoid", "linear"], rng)
    )
    Xtr = _scale_features(model, X[train_idx])
    ytr = y[train_idx]
    Xte = _scale_features(model, X[test_idx])
    yte = y[test_idx]

    net = model.net
    opt = adam_init(net, learning_rate=learning_rate)
    cost_curve = []
    best_mse = math.inf
    best_epoch = -1
    best_net = net.copy()
    for epoch in range(epochs):
        pred = forward_batch(net, Xtr)[:, 0]
        err = pred - ytr
        cost = alpha1 * float(np.dot(err, err)) + alpha2 * sum(
            float(np.sum(w * w)) for w in net.weights
        )
        if not math.isfinite(cost):
            raise ValueError(f"non-finite training cost at epoch {epoch}")
        cost_curve.append(cost)

        grad, _ = gradient_batch(net, Xtr, (2.0 * alpha1 * err)[:, None])
        for k, w in enumerate(net.weights):
            grad.weights[k] += 2.0 * alpha2 * w
        adam_step(net, grad, opt)

        test_err = forward_batch(net, Xte)[:, 0] - yte
        mse = float(np.mean(test_err**2))
        if mse < best_mse:
            best_mse = mse
            best_epoch = epoch
            best_net = net.copy()

    return TrainResult(ComfortModel(best_net, model.input_scaling), cost_curve, best_epoch, best_mse)


def predict_comfort(
    model: ComfortModel, t_in: float, h_in: float, defaults: ComfortDefaults | None = None
) -> float:
    """Comfort vote for indoor conditions, other factors at their defaults.

    Output is clamped to the reporting scale [-3, 3].
    """
    if defaults is None:
        defaults = ComfortDefaults()
    _check_range("indoor temperature", t_in, *AIR_TEMP_RANGE)
    _check_range("indoor humidity", h_in, *HUMIDITY_RANGE)
    mrt = t_in if defaults.mean_radiant_temp is None else defaults.mean_radiant_temp
    x = np.array([[t_in, h_in, mrt, defaults.air_speed, defaults.met, defaults.clo]])
    return float(_predict_scaled(model, x)[0])


def evaluate_mse(model: ComfortModel, samples: Sequence[ComfortSample]) -> float:
    """Mean squared error of the model against the samples' own votes."""
    if len(samples) == 0:
        raise ValueError("empty sample list")
    X = np.array([s.features() for s in samples], dtype=float)
    y = np.array([s.vote for s in samples], dtype=float)
    return float(np.mean((_predict_scaled(model, X) - y) ** 2))


def save_comfort_model(model: ComfortModel, path) -> None:
    """Checkpoint the net with the input scaling appended as a trailer line."""
    trailer = "scaling " + " ".join(f"{o:.16e},{s:.16e}" for o, s in model.input_scaling)
    with open(path, "w") as f:
        f.write(format_dense_net(model.net))
        f.write(trailer + "\n")


def load_comfort_model(path) -> ComfortModel:
    with open(path) as f:
        lines = f.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or not lines[-1].startswith("scaling "):
        raise DatasetError(f"{path}: missing scaling trailer line")
    pairs = []
    for token in lines[-1].split()[1:]:
        try:
            offset, scale = token.split(",")
            pairs.append((float(offset), float(scale)))
        except ValueError:
            raise DatasetError(f"{path}: bad scaling token {token!r}") from None
    if len(pairs) != 6:
        raise DatasetError(f"{path}: expected 6 scaling pairs, got {len(pairs)}")
    net = parse_dense_net("\n".join(lines[:-1]))
    return ComfortModel(net, tuple(pairs))

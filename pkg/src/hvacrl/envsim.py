"""Discrete-time building zone simulator and its control surface.

A single-node lumped thermal model (one envelope resistance, one
capacitance) plus a separate moisture balance stands in for a full
building-simulation stack.  The HVAC plant drives the zone toward the
commanded temperature/humidity set-points under a capacity cap, and the
electrical energy drawn each slot is the delivered thermal energy
(sensible plus latent) divided by the plant's COP.

The controller-facing surface is a sequential decision process: the
observable state is (indoor temp, indoor humidity, outdoor temp, outdoor
humidity), the action is the pair of set-points, and the scalar reward
trades predicted comfort against energy use.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .comfort import ComfortDefaults, ComfortModel, predict_comfort

TEMP_SETPOINT_RANGE = (15.0, 35.0)
HUMIDITY_SETPOINT_RANGE = (0.0, 100.0)

# Per-unit internal gains (typical office assumptions).
OCCUPANT_SENSIBLE_W = 75.0
OCCUPANT_LATENT_W = 55.0
COMPUTER_SENSIBLE_W = 120.0

# Moisture bookkeeping constants: room air mass from floor area times a
# nominal ceiling height and air density; relative humidity treated as
# proportional to moisture content at a fixed reference saturation ratio.
CEILING_HEIGHT_M = 2.7
AIR_DENSITY = 1.2  # kg/m3
SATURATION_RATIO = 0.0199  # kg water per kg air at ~25 C
LATENT_HEAT = 2450.0  # kJ/kg evaporated water

TEMP_DEADBAND = 0.1  # degC of set-point slack before the plant acts
RH_DEADBAND = 0.5  # % RH of slack before dehumidification starts

SUBSTEPS_PER_SLOT = 60

TRAJECTORY_HEADER = "t,T_in,H_in,T_out,H_out,T_set,H_set,M,P,R"


class WeatherError(ValueError):
    """Raised for unreadable weather files or queries outside coverage."""


@dataclass(frozen=True)
class SyntheticWeather:
    """Sinusoidal daily weather with optional per-hour Gaussian noise.

    Values are generated at integer hours (noise drawn from a stream keyed
    by (seed, hour), so any hour can be evaluated independently) and
    interpolated linearly in between.  Defaults approximate a hot, humid
    climate.  Humidity swings opposite to temperature: mid-afternoon is
    hottest and driest.
    """

    temp_mean: float = 29.0
    temp_amplitude: float = 3.0
    rh_mean: float = 75.0
    rh_amplitude: float = 10.0
    noise_sigma: float = 0.0
    seed: int = 0
    peak_hour: float = 15.0

    def _node(self, k: int) -> tuple[float, float]:
        phase = math.cos(2.0 * math.pi * (k - self.peak_hour) / 24.0)
        temp = self.temp_mean + self.temp_amplitude * phase
        rh = self.rh_mean - self.rh_amplitude * phase
        if self.noise_sigma > 0.0:
            noise = np.random.default_rng([self.seed, k]).normal(0.0, self.noise_sigma, 2)
            temp += float(noise[0])
            rh += float(noise[1])
        return temp, min(100.0, max(0.0, rh))


@dataclass(frozen=True)
class WeatherSeries:
    """Hourly observations, linearly interpolated; defined only over coverage."""

    hours: tuple[float, ...]
    temps: tuple[float, ...]
    rhs: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.hours) == len(self.temps) == len(self.rhs)) or len(self.hours) == 0:
            raise WeatherError("series needs equal-length, non-empty columns")
        if any(b <= a for a, b in zip(self.hours, self.hours[1:])):
            raise WeatherError("series hours must be strictly increasing")
        if any(not 0.0 <= rh <= 100.0 for rh in self.rhs):
            raise WeatherError("series humidity outside [0, 100]")


WeatherSource = SyntheticWeather | WeatherSeries


def weather_at(source: WeatherSource, hours: float) -> tuple[float, float]:
    """Outdoor (temperature, humidity) at an absolute time in hours."""
    if isinstance(source, SyntheticWeather):
        k = math.floor(hours)
        frac = hours - k
        t0, h0 = source._node(k)
        if frac == 0.0:
            return t0, h0
        t1, h1 = source._node(k + 1)
        return t0 + frac * (t1 - t0), h0 + frac * (h1 - h0)
    if not source.hours[0] <= hours <= source.hours[-1]:
        raise WeatherError(
            f"time {hours} h outside series coverage [{source.hours[0]}, {source.hours[-1]}]"
        )
    i = int(np.searchsorted(source.hours, hours, side="right")) - 1
    if i == len(source.hours) - 1:
        return source.temps[i], source.rhs[i]
    span = source.hours[i + 1] - source.hours[i]
    frac = (hours - source.hours[i]) / span
    return (
        source.temps[i] + frac * (source.temps[i + 1] - source.temps[i]),
        source.rhs[i] + frac * (source.rhs[i + 1] - source.rhs[i]),
    )


def load_weather_csv(path) -> WeatherSeries:
    if not os.path.exists(path):
        raise WeatherError(f"no such weather file: {path}")
    hours, temps, rhs = [], [], []
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != "hour,temp_c,rh_pct":
            raise WeatherError(f"line 1: bad header {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise WeatherError(f"line {lineno}: expected 3 fields, got {len(parts)}")
            try:
                h, t, rh = (float(p) for p in parts)
            except ValueError:
                raise WeatherError(f"line {lineno}: unparseable number in {line!r}") from None
            if hours and h <= hours[-1]:
                raise WeatherError(f"line {lineno}: hour {h} not strictly increasing")
            if not 0.0 <= rh <= 100.0:
                raise WeatherError(f"line {lineno}: humidity {rh} outside [0, 100]")
            hours.append(h)
            temps.append(t)
            rhs.append(rh)
    return WeatherSeries(tuple(hours), tuple(temps), tuple(rhs))


def write_weather_csv(path, rows: Sequence[tuple[float, float, float]]) -> None:
    with open(path, "w") as f:
        f.write("hour,temp_c,rh_pct\n")
        for h, t, rh in rows:
            f.write(f"{repr(float(h))},{repr(float(t))},{repr(float(rh))}\n")


@dataclass(frozen=True)
class ThermalState:
    t_in: float
    h_in: float
    t_out: float
    h_out: float
    slot: int = 0

    def __post_init__(self):
        values = (self.t_in, self.h_in, self.t_out, self.h_out)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite thermal state {values}")
        if not 0.0 <= self.h_in <= 100.0 or not 0.0 <= self.h_out <= 100.0:
            raise ValueError(f"humidity outside [0, 100] in {values}")
        if self.slot < 0:
            raise ValueError("slot index must be non-negative")

    def vector(self) -> np.ndarray:
        return np.array([self.t_in, self.h_in, self.t_out, self.h_out])


@dataclass(frozen=True)
class ControlAction:
    t_set: float
    h_set: float

    def __post_init__(self):
        lo, hi = TEMP_SETPOINT_RANGE
        if not lo <= self.t_set <= hi:
            raise ValueError(f"temperature set-point {self.t_set} outside [{lo}, {hi}]")
        lo, hi = HUMIDITY_SETPOINT_RANGE
        if not lo <= self.h_set <= hi:
            raise ValueError(f"humidity set-point {self.h_set} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class ZoneConfig:
    floor_area: float = 307.0  # m2
    occupants: int = 30
    computers: int = 40
    air_change_rate: float = 0.67  # 1/h
    thermal_capacitance: float = 15_000.0  # kJ/K
    envelope_resistance: float = 4.0  # K/kW
    hvac_capacity: float = 20.0  # kW
    cop: float = 3.0
    slot_minutes: float = 30.0

    def __post_init__(self):
        for name in ("floor_area", "thermal_capacitance", "envelope_resistance", "cop",
                     "slot_minutes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("occupants", "computers", "air_change_rate", "hvac_capacity"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def air_mass(self) -> float:
        return self.floor_area * CEILING_HEIGHT_M * AIR_DENSITY


@dataclass(frozen=True)
class RewardConfig:
    energy_weight: float = 0.05
    comfort_threshold: float = 0.5

    def __post_init__(self):
        if not math.isfinite(self.energy_weight) or self.energy_weight < 0:
            raise ValueError("energy weight must be finite and >= 0")
        if not math.isfinite(self.comfort_threshold) or self.comfort_threshold < 0:
            raise ValueError("comfort threshold must be finite and >= 0")


def reward(comfort: float, energy_kwh: float, rc: RewardConfig) -> float:
    """Energy-weighted penalty plus comfort-band violation distance, negated.

    Inside the open comfort band the comfort term is zero; outside, it is
    the distance to the nearer band edge, so the penalty is continuous and
    exactly zero on the boundary.
    """
    if not (math.isfinite(comfort) and math.isfinite(energy_kwh)):
        raise ValueError("reward inputs must be finite")
    d = rc.comfort_threshold
    if comfort > d:
        violation = comfort - d
    elif comfort < -d:
        violation = -d - comfort
    else:
        violation = 0.0
    return -rc.energy_weight * energy_kwh - violation


def step_zone(
    state: ThermalState, action: ControlAction, config: ZoneConfig, source: WeatherSource
) -> tuple[ThermalState, float]:
    """Advance one slot of zone dynamics; returns (next state, kWh consumed).

    Explicit Euler at 60 sub-steps per slot.  Sensible balance:
    dT/dt = [(T_out - T_in)/R + Q_internal + Q_hvac] / C, with Q_hvac the
    bounded drive toward the temperature set-point (idle inside a small
    dead-band).  Moisture: air-change mixing toward outdoor humidity,
    occupant latent gain, and bounded dehumidification toward the humidity
    set-point using whatever capacity the sensible drive left over.
    Outdoor conditions are held at their slot-start values.
    """
    t_out, h_out = weather_at(source, state.slot * config.slot_minutes / 60.0)
    dt = config.slot_minutes * 60.0 / SUBSTEPS_PER_SLOT  # seconds
    cap = config.hvac_capacity

    q_internal = (
        config.occupants * OCCUPANT_SENSIBLE_W + config.computers * COMPUTER_SENSIBLE_W
    ) / 1000.0  # kW
    # occupant latent gain expressed directly in % RH per second
    moisture_gain = (
        config.occupants * OCCUPANT_LATENT_W / 1000.0 / LATENT_HEAT
        / (config.air_mass * SATURATION_RATIO) * 100.0
    )
    rh_per_kg = 100.0 / (config.air_mass * SATURATION_RATIO)  # % RH per kg water
    mix_rate = config.air_change_rate / 3600.0  # 1/s

    t_in, h_in = state.t_in, state.h_in
    thermal_kj = 0.0
    for _ in range(SUBSTEPS_PER_SLOT):
        q_env = (t_out - t_in) / config.envelope_resistance
        if abs(action.t_set - t_in) < TEMP_DEADBAND:
            q_hvac = 0.0
        else:
            q_needed = config.thermal_capacitance * (action.t_set - t_in) / dt - (
                q_env + q_internal
            )
            q_hvac = min(cap, max(-cap, q_needed))
        t_in += (q_env + q_internal + q_hvac) / config.thermal_capacitance * dt
        thermal_kj += abs(q_hvac) * dt

        dh = mix_rate * (h_out - h_in) + moisture_gain
        if h_in > action.h_set + RH_DEADBAND:
            latent_cap = max(0.0, cap - abs(q_hvac))  # kW left for moisture removal
            removal_needed = (h_in - action.h_set) / rh_per_kg / dt + max(0.0, dh) / rh_per_kg
            removal = min(latent_cap / LATENT_HEAT, removal_needed)  # kg/s
            dh -= removal * rh_per_kg
            thermal_kj += removal * LATENT_HEAT * dt
        h_in = min(100.0, max(0.0, h_in + dh * dt))
        if not (math.isfinite(t_in) and math.isfinite(h_in)):
            raise RuntimeError(f"zone integration diverged at slot {state.slot}")

    energy_kwh = thermal_kj / 3600.0 / config.cop
    next_hours = (state.slot + 1) * config.slot_minutes / 60.0
    t_out_next, h_out_next = weather_at(source, next_hours)
    return (
        ThermalState(t_in, h_in, t_out_next, h_out_next, state.slot + 1),
        energy_kwh,
    )


class StepResult(NamedTuple):
    state: ThermalState
    reward: float
    comfort: float
    energy_kwh: float
    terminal: bool


class ZoneEnv:
    """Sequential control surface over the zone simulator.

    One instance is strictly sequential (reset, then step per slot); run
    independent instances for parallel work.  Absolute slot time continues
    across episodes, so consecutive episodes see consecutive days of
    weather.
    """

    def __init__(
        self,
        zone: ZoneConfig | None = None,
        reward_config: RewardConfig | None = None,
        weather: WeatherSource | None = None,
        comfort_defaults: ComfortDefaults | None = None,
        slots_per_episode: int = 48,
    ):
        if slots_per_episode < 1:
            raise ValueError("slots_per_episode must be >= 1")
        self.zone = zone if zone is not None else ZoneConfig()
        self.reward_config = reward_config if reward_config is not None else RewardConfig()
        self.weather = weather if weather is not None else SyntheticWeather()
        self.comfort_defaults = (
            comfort_defaults if comfort_defaults is not None else ComfortDefaults()
        )
        self.slots_per_episode = slots_per_episode
        self._state: ThermalState | None = None
        self._slot_in_episode = 0
        self._absolute_slot = 0

    def reset(self, seed: int) -> ThermalState:
        """Start an episode: indoor conditions drawn uniformly, outdoor from weather."""
        rng = np.random.default_rng(seed)
        t_in = rng.uniform(22.0, 30.0)
        h_in = rng.uniform(50.0, 85.0)
        hours = self._absolute_slot * self.zone.slot_minutes / 60.0
        t_out, h_out = weather_at(self.weather, hours)
        self._state = ThermalState(t_in, h_in, t_out, h_out, self._absolute_slot)
        self._slot_in_episode = 0
        return self._state

    def observe(self) -> ThermalState:
        if self._state is None:
            raise RuntimeError("environment not initialized; call reset first")
        return self._state

    def step(self, action: ControlAction, comfort: ComfortModel) -> StepResult:
        """Apply set-points for one slot; comfort is scored on the resulting state."""
        state = self.observe()
        next_state, energy = step_zone(state, action, self.zone, self.weather)
        m = predict_comfort(comfort, next_state.t_in, next_state.h_in, self.comfort_defaults)
        r = reward(m, energy, self.reward_config)
        self._slot_in_episode += 1
        self._absolute_slot = next_state.slot
        self._state = next_state
        return StepResult(next_state, r, m, energy, self._slot_in_episode >= self.slots_per_episode)


def write_trajectory_csv(path, rows: Sequence[tuple]) -> None:
    """Per-slot log: t,T_in,H_in,T_out,H_out,T_set,H_set,M,P,R."""
    with open(path, "w") as f:
        f.write(TRAJECTORY_HEADER + "\n")
        for row in rows:
            if len(row) != 10:
                raise ValueError(f"trajectory row needs 10 fields, got {len(row)}")
            t, *rest = row
            f.write(",".join([str(int(t))] + [repr(float(v)) for v in rest]) + "\n")

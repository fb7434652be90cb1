"""Ground-truth simulator for the 2D tracking experiments.

Generates true trajectories from the transition prior, per-modality
observations, and scripted modality-failure scenarios. Per step and
modality the sensor status is one of

* NORMAL -- observation drawn from the true observation model,
* FAILED -- observation drawn uniformly over the modality's value
  space (the sensor emits garbage that looks like a reading),
* LOST   -- no observation at all.

The four built-in scenarios cover: no failures; alternating one-sided
failures; losses; and simultaneous failures of both modalities.
Everything the simulator produces is a pure function of its seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .ssm import ObservationFrame

DEFAULT_X0 = np.array([1.0, 1.0, 200.0, 200.0])
DEFAULT_HORIZON = 300


class ObservationStatus(IntEnum):
    NORMAL = 0
    FAILED = 1
    LOST = 2


@dataclass(frozen=True)
class FailureWindow:
    modality: int
    t_start: int
    t_end: int
    probability: float


@dataclass(frozen=True)
class LossWindow:
    modality: int
    t_start: int
    t_end: int


def _check_window(w, horizon):
    if not 1 <= w.t_start <= w.t_end <= horizon:
        raise ValueError(f"window [{w.t_start}, {w.t_end}] outside [1, {horizon}]")


@dataclass(frozen=True)
class ScenarioSpec:
    """Failure script: horizon plus per-modality failure/loss windows."""

    horizon: int = DEFAULT_HORIZON
    failure_windows: tuple[FailureWindow, ...] = ()
    loss_windows: tuple[LossWindow, ...] = ()
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "failure_windows", tuple(self.failure_windows))
        object.__setattr__(self, "loss_windows", tuple(self.loss_windows))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for w in self.failure_windows:
            _check_window(w, self.horizon)
            if not 0.0 <= w.probability <= 1.0:
                raise ValueError("failure probability must lie in [0, 1]")
        for w in self.loss_windows:
            _check_window(w, self.horizon)
        for lw in self.loss_windows:
            for fw in self.failure_windows:
                if lw.modality == fw.modality and lw.t_start <= fw.t_end and fw.t_start <= lw.t_end:
                    raise ValueError("loss and failure windows overlap for one modality")

    def status_at(self, t: int, modality: int) -> tuple[ObservationStatus, float]:
        """Scripted status at (t, modality); FAILED comes with its probability."""
        for w in self.loss_windows:
            if w.modality == modality and w.t_start <= t <= w.t_end:
                return ObservationStatus.LOST, 0.0
        for w in self.failure_windows:
            if w.modality == modality and w.t_start <= t <= w.t_end:
                return ObservationStatus.FAILED, w.probability
        return ObservationStatus.NORMAL, 0.0


def builtin_scenario(k: int) -> ScenarioSpec:
    """The four benchmark scenarios (modalities are 0-indexed).

    1. no failures;
    2. one modality at a time: modality 0 fails on [190, 210] with
       probability 1.0 and [220, 230] with 0.8, modality 1 on
       [235, 245] with 1.0 and [250, 260] with 0.8;
    3. losses only: modality 0 on [190, 200], modality 1 on [250, 260];
    4. both modalities fail on [190, 200] and [250, 260] with
       probability 1.0 and on [210, 240] with 0.8.
    """
    if k == 1:
        return ScenarioSpec(label="1")
    if k == 2:
        return ScenarioSpec(
            failure_windows=(
                FailureWindow(0, 190, 210, 1.0),
                FailureWindow(0, 220, 230, 0.8),
                FailureWindow(1, 235, 245, 1.0),
                FailureWindow(1, 250, 260, 0.8),
            ),
            label="2",
        )
    if k == 3:
        return ScenarioSpec(
            loss_windows=(
                LossWindow(0, 190, 200),
                LossWindow(1, 250, 260),
            ),
            label="3",
        )
    if k == 4:
        return ScenarioSpec(
            failure_windows=(
                FailureWindow(0, 190, 200, 1.0),
                FailureWindow(1, 190, 200, 1.0),
                FailureWindow(0, 210, 240, 0.8),
                FailureWindow(1, 210, 240, 0.8),
                FailureWindow(0, 250, 260, 1.0),
                FailureWindow(1, 250, 260, 1.0),
            ),
            label="4",
        )
    raise ValueError("scenario index must be 1, 2, 3 or 4")


def simulate_truth(horizon: int, x0, transition, rng) -> np.ndarray:
    """(T, d) Markov rollout; row t-1 is the state at time t (x0 excluded)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    states = np.empty((horizon, x0.shape[0]))
    x = x0
    for t in range(horizon):
        x = transition.sample(x, rng)
        states[t] = x
    return states


def observe(t: int, x, statuses, models, rng) -> ObservationFrame:
    """One frame at time t given per-modality statuses."""
    values = []
    for status, model in zip(statuses, models, strict=True):
        if status == ObservationStatus.LOST:
            values.append(None)
        elif status == ObservationStatus.FAILED:
            values.append(float(model.sample_failed(rng)))
        else:
            values.append(float(model.sample(x, rng)))
    return ObservationFrame.of(t, values)


@dataclass(frozen=True)
class GroundTruthRun:
    """True states, observation frames and the per-step failure log."""

    states: np.ndarray                       # (T, d)
    frames: tuple[ObservationFrame, ...]     # time indices 1..T
    failure_log: np.ndarray                  # (T, n) of ObservationStatus values

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        object.__setattr__(self, "failure_log", np.asarray(self.failure_log, dtype=np.int64))

    @property
    def horizon(self) -> int:
        return len(self.frames)

    @property
    def n_modalities(self) -> int:
        return self.failure_log.shape[1]

    def save(self, path) -> None:
        """Write one JSON record per step (replayable, exact floats)."""
        with open(path, "w") as f:
            for k, frame in enumerate(self.frames):
                rec = {
                    "t": frame.time_index,
                    "state": [float(v) for v in self.states[k]],
                    "observations": [
                        None if obs.value is None else float(obs.value)
                        for obs in frame.observations
                    ],
                    "status": [ObservationStatus(s).name for s in self.failure_log[k]],
                }
                f.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path) -> "GroundTruthRun":
        states, frames, log = [], [], []
        with open(path) as f:
            for line in f:
                rec = json.loads(line)
                states.append(rec["state"])
                frames.append(ObservationFrame.of(rec["t"], rec["observations"]))
                log.append([ObservationStatus[s] for s in rec["status"]])
        return cls(np.asarray(states), tuple(frames), np.asarray(log))


def generate_run(spec: ScenarioSpec, x0, transition, models, rng) -> GroundTruthRun:
    """Roll out truth, then script statuses and draw observations.

    Inside a failure window each step fails independently with the
    window's probability; the realised status of every (t, modality)
    pair is recorded in the failure log.
    """
    states = simulate_truth(spec.horizon, x0, transition, rng)
    n = len(models)
    frames = []
    log = np.empty((spec.horizon, n), dtype=np.int64)
    for t in range(1, spec.horizon + 1):
        statuses = []
        for i in range(n):
            status, prob = spec.status_at(t, i)
            if status == ObservationStatus.FAILED and rng.random() >= prob:
                status = ObservationStatus.NORMAL
            statuses.append(status)
        log[t - 1] = statuses
        frames.append(observe(t, states[t - 1], statuses, models, rng))
    return GroundTruthRun(states, tuple(frames), log)

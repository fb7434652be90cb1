"""Comparison filters: plain PF, static model averaging, two-stage.

* ``pf_step`` -- bootstrap PF that always trusts every present modality.
* ``sma_step`` -- one independent single-modality PF per channel, with
  the unweighted mean of their estimates as the output.
* ``ts_step`` -- detect-then-fuse: a running per-modality failure
  probability alpha tempers each likelihood to L^(1-alpha) before
  fusing in a single PF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dma import joint_loglik, marginal_loglik
from .particles import (
    ParticleSet,
    WeightCollapse,
    estimate_mean,
    propagate,
    residual_resample,
    reweight,
    uniform_log_weights,
)

TS_SMOOTHING = 0.5


def _reweight_or_reset(prop: ParticleSet, log_lik):
    """Reweight, falling back to uniform weights on total collapse."""
    try:
        return reweight(prop, log_lik), None
    except WeightCollapse:
        return ParticleSet(prop.states, uniform_log_weights(prop.n)), "weight_collapse"


def pf_step(particles: ParticleSet, frame, transition, models, rng, trace=None):
    """One bootstrap-PF step; returns (particles, estimate).

    Propagate, reweight with the joint log-likelihood of all present
    modalities (lost ones contribute nothing), estimate, resample.
    """
    prop = propagate(particles, transition, rng)
    upd, flag = _reweight_or_reset(prop, joint_loglik(frame, prop.states, models))
    estimate = estimate_mean(upd)
    resampled = residual_resample(upd, rng)
    if trace is not None:
        trace.record(frame.time_index, estimate, flag=flag)
    return resampled, estimate


@dataclass(frozen=True)
class SmaState:
    """One particle set per modality, indexed by modality."""

    sub_filters: tuple[ParticleSet, ...]

    def __post_init__(self):
        object.__setattr__(self, "sub_filters", tuple(self.sub_filters))


def init_sma(particles: ParticleSet, n_modalities: int) -> SmaState:
    """All sub-filters start from the same initial particle set."""
    return SmaState((particles,) * n_modalities)


def sma_step(state: SmaState, frame, transition, models, rng, trace=None):
    """One static-model-averaging step; returns (state, estimate).

    Each sub-filter sees only its own modality's observation and runs on
    its own child stream spawned from ``rng`` (keyed by modality index,
    so the result does not depend on evaluation order); the estimate is
    the unweighted mean of the sub-filter estimates.
    """
    n = len(state.sub_filters)
    rngs = rng.spawn(n)
    subs = []
    estimates = []
    for i in range(n):
        sub, est = pf_step(state.sub_filters[i], frame.restrict_to(i), transition, models, rngs[i])
        subs.append(sub)
        estimates.append(est)
    estimate = np.mean(estimates, axis=0)
    if trace is not None:
        trace.record(frame.time_index, estimate)
    return SmaState(tuple(subs)), estimate


@dataclass(frozen=True)
class TsState:
    """Particles plus per-modality failure-probability estimates."""

    particles: ParticleSet
    alpha: np.ndarray
    smoothing: float = TS_SMOOTHING

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if np.any(alpha < 0.0) or np.any(alpha > 1.0):
            raise ValueError("failure probabilities must lie in [0, 1]")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ValueError("smoothing must lie in [0, 1]")
        object.__setattr__(self, "alpha", alpha)


def init_ts(particles: ParticleSet, n_modalities: int, smoothing: float = TS_SMOOTHING) -> TsState:
    return TsState(particles, np.zeros(n_modalities), smoothing)


def _failure_prob_from_logliks(prev_alpha, p, logliks, models, smoothing):
    alpha = np.array(prev_alpha, dtype=float)
    for i, ll in logliks.items():
        log_g = marginal_loglik(p, ll)
        log_g0 = models[i].null_loglik()
        # raw = g0 / (g0 + g), evaluated stably in the log domain
        raw = np.exp(-np.logaddexp(0.0, log_g - log_g0))
        alpha[i] = smoothing * alpha[i] + (1.0 - smoothing) * raw
    return alpha


def estimate_failure_prob(prev_alpha, p: ParticleSet, frame, models, smoothing: float = TS_SMOOTHING):
    """Exponentially smoothed two-hypothesis failure probabilities.

    For each present modality the raw failure probability compares the
    marginal likelihood of the observation under the particle cloud
    against the uniform-failure density 1/V: raw = g0 / (g0 + g). A lost
    modality keeps its previous value. Expects propagated particles
    still carrying the pre-update weights.
    """
    logliks = {
        i: np.asarray(models[i].loglik(obs.value, p.states), dtype=float)
        for i, obs in enumerate(frame.observations)
        if obs.present
    }
    return _failure_prob_from_logliks(prev_alpha, p, logliks, models, smoothing)


def ts_step(state: TsState, frame, transition, models, rng, trace=None):
    """One two-stage step; returns (state, estimate).

    Propagate, refresh the failure probabilities, reweight with
    sum_i (1 - alpha_i) * loglik_i over present modalities, estimate,
    resample.
    """
    prop = propagate(state.particles, transition, rng)
    logliks = {
        i: np.asarray(models[i].loglik(obs.value, prop.states), dtype=float)
        for i, obs in enumerate(frame.observations)
        if obs.present
    }
    alpha = _failure_prob_from_logliks(state.alpha, prop, logliks, models, state.smoothing)
    tempered = np.zeros(prop.n)
    for i, ll in logliks.items():
        tempered += (1.0 - alpha[i]) * ll
    upd, flag = _reweight_or_reset(prop, tempered)
    estimate = estimate_mean(upd)
    resampled = residual_resample(upd, rng)
    if trace is not None:
        trace.record(frame.time_index, estimate, model_weights=alpha, flag=flag)
    return TsState(resampled, alpha, state.smoothing), estimate

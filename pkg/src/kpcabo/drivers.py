"""Optimisation loops: KPCA-BO, linear PCA-BO and vanilla BO.

All three share the Latin hypercube DoE, the GP surrogate and the
multi-restart EI maximisation; they differ in the space the surrogate lives
in and in how candidates are mapped back to the search box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import Callable, Optional

import numpy as np

from . import acquisition, backmap, gpr, kpca, pca
from .config import RunConfig, RunRecord
from .doe import lhs
from .testbed import BenchmarkFunction

log = logging.getLogger(__name__)

NAN = float("nan")


@dataclass
class Archive:
    X: list
    Y: list
    bounds: np.ndarray
    n0: int

    def append(self, x, y):
        self.X.append(np.asarray(x, dtype=float))
        self.Y.append(float(y))

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.X)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.Y)

    def __len__(self):
        return len(self.Y)


@dataclass
class RunState:
    archive: Archive
    rng: np.random.Generator
    gamma_current: Optional[float] = None
    kpca: Optional[object] = None
    rescaled: Optional[kpca.RescaledData] = None
    iteration: int = 0

    @property
    def best_so_far(self) -> float:
        return min(self.archive.Y)


@dataclass
class StepResult:
    proposal: acquisition.Proposal
    fit_seconds: float
    acq_seconds: float
    info: dict = field(default_factory=dict)


def percentile20(Y) -> float:
    """The ceil(0.2 n)-th smallest value (order statistic, no interpolation)."""
    Y = np.sort(np.asarray(Y, dtype=float))
    return float(Y[max(math.ceil(0.2 * len(Y)), 1) - 1])


def retune_needed(state: RunState) -> bool:
    if state.rescaled is None:
        return True
    Y = state.archive.Y
    return Y[-1] <= percentile20(Y)


def _refresh_rescaling(state: RunState) -> bool:
    """Recompute the rank rescaling when the trigger fires; report whether it did."""
    if retune_needed(state):
        state.rescaled = kpca.rescale(state.archive.points, state.archive.values)
        return True
    return False


def _reduced_inputs(model, X):
    """GP inputs: every archive point through the same map the pre-images invert."""
    return model.map(X)


def _fit_and_propose(state, config, Z, search_bounds, preimage):
    t0 = perf_counter()
    gp = gpr.fit(Z, state.archive.values, state.rng, input_bounds=search_bounds)
    t1 = perf_counter()
    prop = acquisition.propose(gp, search_bounds, preimage, config.restarts, state.rng)
    t2 = perf_counter()
    return prop, t1 - t0, t2 - t1


def kpca_step(state: RunState, config: RunConfig) -> StepResult:
    archive = state.archive
    retuned = _refresh_rescaling(state)
    if retuned:
        state.gamma_current = kpca.tune_gamma(state.rescaled, config.eta)
    model = kpca.fit_kpca(state.rescaled, state.gamma_current, config.eta)
    state.kpca = model
    X = archive.points
    Z = _reduced_inputs(model, X)
    domain = kpca.reduced_domain(model, archive.bounds)

    def preimage(z):
        return backmap.backward(model, z, X, archive.bounds, state.rng)

    prop, fit_s, acq_s = _fit_and_propose(state, config, Z, domain.bounds, preimage)
    info = dict(r=model.r, gamma=model.gamma, retuned=int(retuned), radius=domain.radius,
                explained=model.explained_ratio)
    return StepResult(prop, fit_s, acq_s, info)


def pca_step(state: RunState, config: RunConfig) -> StepResult:
    archive = state.archive
    retuned = _refresh_rescaling(state)
    model = pca.fit_pca(state.rescaled, config.eta)
    state.kpca = model
    Z = _reduced_inputs(model, archive.points)
    search = model.domain_bounds(archive.bounds)

    def preimage(z):
        return model.backward(z, archive.bounds)

    prop, fit_s, acq_s = _fit_and_propose(state, config, Z, search, preimage)
    explained = float(model.eigenvalues[: model.r].sum() / model.eigenvalues.sum())
    info = dict(r=model.r, gamma=NAN, retuned=int(retuned), radius=NAN, explained=explained)
    return StepResult(prop, fit_s, acq_s, info)


def bo_step(state: RunState, config: RunConfig) -> StepResult:
    archive = state.archive
    prop, fit_s, acq_s = _fit_and_propose(
        state, config, archive.points, archive.bounds, acquisition.identity_preimage(archive.bounds)
    )
    info = dict(r=archive.bounds.shape[0], gamma=NAN, retuned=0, radius=NAN, explained=NAN)
    return StepResult(prop, fit_s, acq_s, info)


def _row(eval_count, y, best, f_opt, step: Optional[StepResult] = None) -> dict:
    row = dict(eval_count=eval_count, y=y, best_so_far=best, target_gap=best - f_opt,
               fit_seconds=NAN, acq_seconds=NAN, r=NAN, gamma=NAN, ei=NAN, feasible=NAN,
               residual=NAN, clipped=NAN, retuned=NAN, radius=NAN, explained=NAN)
    if step is not None:
        p = step.proposal
        row.update(fit_seconds=step.fit_seconds, acq_seconds=step.acq_seconds, ei=p.ei,
                   feasible=int(p.feasible), residual=p.preimage.residual, clipped=int(p.preimage.clipped))
        row.update(step.info)
    return row


def run_loop(f: BenchmarkFunction, budget: int, config: RunConfig,
             step: Callable[[RunState, RunConfig], StepResult]) -> RunRecord:
    t_start = perf_counter()
    rng = np.random.default_rng(config.run_seed)
    bounds = f.bounds
    record = RunRecord(config=config)
    archive = Archive(X=[], Y=[], bounds=bounds, n0=config.doe_size)
    best = math.inf
    for x in lhs(config.doe_size, bounds, rng):
        y = f.evaluate(x)
        archive.append(x, y)
        best = min(best, y)
        record.iterations.append(_row(len(archive), y, best, f.optimum_value))
    state = RunState(archive=archive, rng=rng)
    while len(archive) < budget:
        try:
            result = step(state, config)
        except kpca.DegenerateDataError as exc:
            record.status = "degenerate"
            record.message = f"iteration {state.iteration}: {exc}"
            log.warning("run %s aborted: %s", config.digest(), exc)
            break
        prop = result.proposal
        if not prop.feasible:
            log.debug("iteration %d: no restart had an unclipped pre-image", state.iteration)
        y = f.evaluate(prop.x)
        archive.append(prop.x, y)
        best = min(best, y)
        state.iteration += 1
        record.iterations.append(_row(len(archive), y, best, f.optimum_value, result))
    record.final_best = best
    record.total_seconds = perf_counter() - t_start
    record.X = archive.points
    return record


def run_kpca_bo(f: BenchmarkFunction, budget: int, config: RunConfig) -> RunRecord:
    return run_loop(f, budget, config, kpca_step)


def run_pca_bo(f: BenchmarkFunction, budget: int, config: RunConfig) -> RunRecord:
    return run_loop(f, budget, config, pca_step)


def run_vanilla_bo(f: BenchmarkFunction, budget: int, config: RunConfig) -> RunRecord:
    return run_loop(f, budget, config, bo_step)


DRIVERS = {"bo": run_vanilla_bo, "pca-bo": run_pca_bo, "kpca-bo": run_kpca_bo}


def run(f: BenchmarkFunction, config: RunConfig) -> RunRecord:
    try:
        driver = DRIVERS[config.algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {config.algorithm!r}; choose from {', '.join(DRIVERS)}") from None
    return driver(f, config.budget, config)

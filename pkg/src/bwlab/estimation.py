"""Parameter estimation from measured hysteresis curves.

The estimator is a real-coded genetic algorithm over the active parameters
of the chosen model variant, with force mean-squared error as the fitness.
Whole generations are evaluated with one compiled batch simulation per
round, so the cost is dominated by population * generations * series
length. Candidates whose simulation blows up (a real possibility when a
trial yield scale is far smaller than the measured displacement range)
receive infinite fitness and are bred out.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EstimationError
from .loading import LoadingHistory
from .model import HysteresisCurve, simulate_batch
from .params import (NEUTRAL_VALUES, PARAM_NAMES, BwParams, Variant,
                     bounds_arrays)


def hysteresis_area(curve: HysteresisCurve, f_y_si: float, u_y: float) -> float:
    """Signed enclosed work of a force-displacement path, normalized.

    Trapezoid accumulation of the work integral f du divided by
    f_y_si * u_y (f_y_si in m/s^2, u_y in meters). Loops traversed in the
    dissipative direction (clockwise in the u-f plane) come out positive;
    traversing the same loop backwards flips the sign.
    """
    if not (f_y_si > 0.0 and u_y > 0.0):
        raise ValueError("normalization scales must be positive")
    du = np.diff(curve.u)
    area = float(np.sum(0.5 * (curve.f[1:] + curve.f[:-1]) * du))
    return area / (f_y_si * u_y)


def pearson_r(x, y) -> float:
    """Pearson correlation coefficient; undefined for constant series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two equal-length 1-d series of length >= 2")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("series contain non-finite values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined for zero-variance series")
    return float(np.sum(dx * dy) / math.sqrt(sxx * syy))


@dataclass(frozen=True)
class GaConfig:
    """Genetic algorithm settings.

    generations counts evaluated generations including the initial random
    population, so generations=1 just returns the best random candidate.
    mutation_scale is the mutation standard deviation as a fraction of each
    parameter range; it decays linearly to a tenth over the run.
    """

    generations: int = 100
    population: int = 300
    tournament: int = 3
    crossover_prob: float = 0.9
    blend_alpha: float = 0.5
    mutation_prob: float = 0.2
    mutation_scale: float = 0.05
    elite: int = 1
    seed: int = 0
    substeps: int = 4

    def __post_init__(self):
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not (1 <= self.tournament <= self.population):
            raise ValueError("tournament size must be in [1, population]")
        for name in ("crossover_prob", "mutation_prob"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if self.blend_alpha < 0.0 or self.mutation_scale < 0.0:
            raise ValueError("blend_alpha and mutation_scale must be >= 0")
        if not (0 <= self.elite < self.population):
            raise ValueError("elite must be in [0, population)")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


@dataclass(frozen=True)
class FitResult:
    params: BwParams
    best_fitness: float
    trace: tuple[float, ...]
    n_evaluations: int
    n_failed: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "best_fitness": self.best_fitness,
            "trace": list(self.trace),
            "n_evaluations": self.n_evaluations,
            "n_failed": self.n_failed,
            "wall_time_s": self.wall_time_s,
        }


def _expand(pop: np.ndarray, active_idx: np.ndarray) -> np.ndarray:
    full = np.tile([NEUTRAL_VALUES.get(n, 0.0) for n in PARAM_NAMES],
                   (pop.shape[0], 1))
    full[:, active_idx] = pop
    return full


def ga_estimate(curve: HysteresisCurve, variant: Variant | str,
                config: GaConfig | None = None) -> FitResult:
    """Fit the active parameters of a variant to a measured curve.

    Raises :class:`EstimationError` if an entire generation fails to
    simulate (the fit cannot make progress without a finite fitness).
    """
    t0 = time.perf_counter()
    variant = Variant(variant)
    cfg = GaConfig() if config is None else config
    names = variant.active_names
    active_idx = np.array([PARAM_NAMES.index(n) for n in names])
    lo, hi = bounds_arrays(names)
    span = hi - lo
    rng = np.random.default_rng(cfg.seed)
    disp = curve.u
    target = curve.f

    n_failed = 0

    def evaluate(pop):
        nonlocal n_failed
        theta = _expand(pop, active_idx)
        f_sim, _, _, fail = simulate_batch(theta, disp, substeps=cfg.substeps)
        mse = np.mean((f_sim - target[None, :]) ** 2, axis=1)
        bad = (fail >= 0) | ~np.isfinite(mse)
        n_failed += int(bad.sum())
        mse[bad] = np.inf
        return mse

    pop = rng.uniform(lo, hi, size=(cfg.population, lo.size))
    fitness = evaluate(pop)
    if not np.isfinite(fitness).any():
        raise EstimationError(
            f"all {cfg.population} initial candidates failed to simulate")
    best_i = int(np.argmin(fitness))
    best = pop[best_i].copy()
    best_fit = float(fitness[best_i])
    trace = [best_fit]

    def tournament_pick():
        contenders = rng.integers(0, cfg.population, size=cfg.tournament)
        return pop[contenders[np.argmin(fitness[contenders])]]

    for gen in range(1, cfg.generations):
        progress = (gen - 1) / max(1, cfg.generations - 2)
        sd = cfg.mutation_scale * span * (1.0 - 0.9 * progress)
        elite_rows = pop[np.argsort(fitness)[:cfg.elite]].copy()
        children = np.empty_like(pop)
        children[:cfg.elite] = elite_rows
        for row in range(cfg.elite, cfg.population):
            pa = tournament_pick()
            pb = tournament_pick()
            if rng.random() < cfg.crossover_prob:
                lo_g = np.minimum(pa, pb) - cfg.blend_alpha * np.abs(pa - pb)
                hi_g = np.maximum(pa, pb) + cfg.blend_alpha * np.abs(pa - pb)
                child = rng.uniform(lo_g, hi_g)
            else:
                child = pa.copy()
            mutate = rng.random(lo.size) < cfg.mutation_prob
            steps = rng.normal(0.0, 1.0, size=lo.size) * sd
            child = np.where(mutate, child + steps, child)
            children[row] = np.clip(child, lo, hi)
        pop = children
        fitness = evaluate(pop)
        if not np.isfinite(fitness).any():
            raise EstimationError(
                f"generation {gen + 1}: all candidates failed to simulate")
        gen_best = int(np.argmin(fitness))
        if fitness[gen_best] < best_fit:
            best_fit = float(fitness[gen_best])
            best = pop[gen_best].copy()
        trace.append(best_fit)

    full = _expand(best[None, :], active_idx)[0]
    return FitResult(
        params=BwParams.from_vector(full, variant),
        best_fitness=best_fit,
        trace=tuple(trace),
        n_evaluations=cfg.population * cfg.generations,
        n_failed=n_failed,
        wall_time_s=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class AccuracyReport:
    """Per-sample normalized loop areas for true vs estimated parameters."""

    true_area: tuple[float, ...]
    pred_area: tuple[float, ...]
    in10: tuple[bool, ...]
    in5: tuple[bool, ...]

    @property
    def frac_in10(self) -> float:
        return sum(self.in10) / len(self.in10)

    @property
    def frac_in5(self) -> float:
        return sum(self.in5) / len(self.in5)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("sample,true_area,pred_area,in10,in5\n")
            for i in range(len(self.true_area)):
                fh.write(f"{i},{self.true_area[i]:.9g},{self.pred_area[i]:.9g},"
                         f"{int(self.in10[i])},{int(self.in5[i])}\n")


def accuracy_bands(true_sets, est_sets, validation_history: LoadingHistory,
                   substeps: int = 4) -> AccuracyReport:
    """Compare absolute loop areas on a common validation history.

    The history's amplitudes are rescaled by each TRUE specimen's yield
    displacement, and both areas are normalized by the true specimen's
    F_y * u_y, so each pair is compared on identical displacement input
    with a common normalizer. An estimated set that fails to simulate
    counts as outside every band.
    """
    true_sets = list(true_sets)
    est_sets = list(est_sets)
    if len(true_sets) != len(est_sets) or not true_sets:
        raise ValueError("need equal nonzero counts of true and estimated sets")
    base = validation_history.discretize_normalized()
    scale = np.array([p.u_y for p in true_sets])
    disp = scale[:, None] * base[None, :]
    f_true, _, _, fail_t = simulate_batch(true_sets, disp, substeps=substeps)
    f_est, _, _, fail_e = simulate_batch(est_sets, disp, substeps=substeps)
    if np.any(fail_t >= 0):
        raise EstimationError("a reference specimen failed to simulate")
    du = np.diff(disp, axis=1)
    norm = np.array([p.f_y_si * p.u_y for p in true_sets])
    area_t = np.sum(0.5 * (f_true[:, 1:] + f_true[:, :-1]) * du, axis=1) / norm
    area_e = np.sum(0.5 * (f_est[:, 1:] + f_est[:, :-1]) * du, axis=1) / norm
    true_area = []
    pred_area = []
    in10 = []
    in5 = []
    for i in range(len(true_sets)):
        at = abs(float(area_t[i]))
        if fail_e[i] >= 0:
            true_area.append(float(area_t[i]))
            pred_area.append(float("nan"))
            in10.append(False)
            in5.append(False)
            continue
        ae = abs(float(area_e[i]))
        err = abs(ae - at)
        true_area.append(float(area_t[i]))
        pred_area.append(float(area_e[i]))
        in10.append(bool(err <= 0.10 * at))
        in5.append(bool(err <= 0.05 * at))
    return AccuracyReport(true_area=tuple(true_area), pred_area=tuple(pred_area),
                          in10=tuple(in10), in5=tuple(in5))

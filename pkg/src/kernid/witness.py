"""Search for non-identifiability witnesses.

A witness for a target parameter set is a *different* parameter set of the
same kernel family whose mixed Gram matrix on the design is the same. The
search is a seeded multi-start Nelder-Mead over log-parameters minimising
the normalised Frobenius residual between the two Gram matrices.

A :attr:`Outcome.NO_WITNESS` report only says that no witness was found
under the given search configuration. It is not a proof of identifiability.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from . import _parallel
from .design import Design
from .errors import DimensionMismatch, Infeasible, InvalidBounds
from .golden import GOLDEN_EXAMPLES
from .kernels import (
    MixedKernelSpec,
    PeriodicParams,
    RbfParams,
    Variant,
    build_gram,
    rbf_periodic,
)

LOG_BOUND = 5.0


@dataclass(frozen=True)
class WitnessSearchConfig:
    """Multi-start search settings shared by witness search and likelihood fitting.

    ``param_bounds`` is a box in log-parameter space, one ``(low, high)`` per
    free parameter. Starting points are drawn uniformly inside it.
    """

    starts: int = 64
    max_iters: int = 2000
    residual_tol: float = 1e-8
    distinct_tol: float = 1e-3
    param_bounds: tuple[tuple[float, float], ...] = ((-LOG_BOUND, LOG_BOUND),) * 4
    rng_seed: int = 0

    def __post_init__(self):
        if self.starts < 1 or self.max_iters < 1:
            raise ValueError("starts and max_iters must be positive")
        if not (self.residual_tol > 0 and self.distinct_tol > 0):
            raise ValueError("residual_tol and distinct_tol must be positive")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.param_bounds)
        for lo, hi in bounds:
            if not lo < hi:
                raise InvalidBounds(f"lower bound {lo} is not below upper bound {hi}")
        object.__setattr__(self, "param_bounds", bounds)

    def bounds_for(self, k: int) -> tuple[tuple[float, float], ...]:
        if len(self.param_bounds) == k:
            return self.param_bounds
        if len(self.param_bounds) == 1:
            return self.param_bounds * k
        raise InvalidBounds(f"need {k} parameter bounds, got {len(self.param_bounds)}")

    def initial_points(self, k: int) -> np.ndarray:
        b = np.array(self.bounds_for(k))
        rng = np.random.default_rng(self.rng_seed)
        return rng.uniform(b[:, 0], b[:, 1], size=(self.starts, k))

    def to_dict(self) -> dict:
        return {
            "starts": self.starts,
            "max_iters": self.max_iters,
            "residual_tol": self.residual_tol,
            "distinct_tol": self.distinct_tol,
            "param_bounds": [list(b) for b in self.param_bounds],
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class StartResult:
    index: int
    x: np.ndarray
    fun: float
    converged: bool
    iterations: int


def nelder_mead_start(objective, index: int, x0: np.ndarray, bounds, max_iters: int,
                      xatol: float = 1e-11, fatol: float = 1e-15) -> StartResult:
    """One bounded Nelder-Mead run, restarted once from its own optimum to shake off a collapsed simplex."""
    res = minimize(objective, x0, method="Nelder-Mead", bounds=bounds,
                   options={"maxiter": max_iters, "xatol": xatol, "fatol": fatol})
    nit = int(res.nit)
    if nit < max_iters:
        res2 = minimize(objective, res.x, method="Nelder-Mead", bounds=bounds,
                        options={"maxiter": max_iters - nit, "xatol": xatol, "fatol": fatol})
        if res2.fun <= res.fun:
            nit += int(res2.nit)
            res = res2
    return StartResult(index, np.asarray(res.x, dtype=float), float(res.fun), bool(res.success), nit)


class GramProfileResidual:
    """Normalised Frobenius residual evaluated on distinct distances with multiplicities.

    Equal to ``||G(candidate) - G(target)||_F / ||G(target)||_F`` because every
    Gram entry depends on its pair only through the distance.
    """

    def __init__(self, target: MixedKernelSpec, design: Design):
        vals, counts = design.distance_profile()
        self.variant = target.variant
        self.r2 = vals * vals
        self.sn2 = np.sin(np.pi * vals / target.period) ** 2 if target.period else None
        self.w = np.sqrt(counts.astype(float))
        self.target = self._profile(np.log(target.values()))
        self.norm = float(np.linalg.norm(self.w * self.target))

    def _profile(self, z):
        a = math.exp(2 * z[0]) * np.exp(-self.r2 * math.exp(-2 * z[1]))
        if self.variant is Variant.TWO_RBF:
            b = math.exp(2 * z[2]) * np.exp(-self.r2 * math.exp(-2 * z[3]))
        else:
            b = math.exp(2 * z[2]) * np.exp(-2.0 * self.sn2 * math.exp(-2 * z[3]))
        return a + b

    def __call__(self, z) -> float:
        diff = self._profile(z) - self.target
        return float(np.linalg.norm(self.w * diff)) / self.norm


def gram_residual(candidate: MixedKernelSpec, target: np.ndarray, design: Design) -> float:
    """``||G(candidate) - target||_F / ||target||_F`` on ``design``."""
    target = np.asarray(target, dtype=float)
    if target.shape != (design.n, design.n):
        raise DimensionMismatch(f"target Gram has shape {target.shape}, design has {design.n} points")
    g = build_gram(candidate, design)
    return float(np.linalg.norm(g - target) / np.linalg.norm(target))


def relative_distance(a: MixedKernelSpec, b: MixedKernelSpec) -> float:
    """Largest relative difference between canonical free parameters, relative to ``b``."""
    va, vb = np.array(a.values()), np.array(b.values())
    return float(np.max(np.abs(va - vb) / np.abs(vb)))


class Outcome(str, enum.Enum):
    WITNESS_FOUND = "witness_found"
    NO_WITNESS = "no_witness_found_under_config"


@dataclass(frozen=True)
class WitnessReport:
    """Result of :func:`find_witness`.

    ``params``/``residual`` hold the witness when one was found, otherwise the
    best distinct candidate (``None``/``inf`` when every start collapsed onto
    the target itself).
    """

    outcome: Outcome
    params: MixedKernelSpec | None
    residual: float
    target_params: MixedKernelSpec
    design: Design
    config: WitnessSearchConfig
    starts_converged: int
    start_index: int | None = None
    distance: float | None = None

    @property
    def found(self) -> bool:
        return self.outcome is Outcome.WITNESS_FOUND

    def summary(self) -> str:
        if self.found:
            return (f"witness found: residual {self.residual:.3e}, relative parameter distance "
                    f"{self.distance:.3e} (start {self.start_index})")
        return (f"no witness found under config ({self.config.starts} starts, seed "
                f"{self.config.rng_seed}); best distinct residual {self.residual:.3e}")

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "params": self.params.to_dict() if self.params is not None else None,
            "residual": self.residual if math.isfinite(self.residual) else None,
            "distance": self.distance,
            "start_index": self.start_index,
            "target_params": self.target_params.to_dict(),
            "starts_converged": self.starts_converged,
            "config": self.config.to_dict(),
        }


def _witness_start(task):
    objective, index, x0, bounds, max_iters = task
    return nelder_mead_start(objective, index, x0, bounds, max_iters)


def find_witness(target_spec: MixedKernelSpec, design: Design,
                 config: WitnessSearchConfig | None = None) -> WitnessReport:
    """Look for a distinct parameter set reproducing ``target_spec``'s Gram matrix on ``design``.

    Every start is re-verified on full Gram matrices. Among starts whose
    verified residual is at most ``residual_tol`` and whose parameters differ
    from the target by at least ``distinct_tol`` (relative), the one with the
    smallest (residual, start index) is reported.
    """
    config = config or WitnessSearchConfig()
    if target_spec.variant is Variant.RBF_PERIODIC and design.dim != 1:
        raise DimensionMismatch("RBF+periodic models need a 1-D design")
    bounds = config.bounds_for(4)
    target_gram = build_gram(target_spec, design)
    objective = GramProfileResidual(target_spec, design)
    tasks = [(objective, i, x0, bounds, config.max_iters)
             for i, x0 in enumerate(config.initial_points(4))]
    results = _parallel.pmap(_witness_start, tasks)

    converged = sum(r.converged for r in results)
    candidates = []
    for r in results:
        try:
            cand = target_spec.with_values(np.exp(r.x))
        except ValueError:
            continue  # equal length-scales: not a valid two-RBF spec
        dist = relative_distance(cand, target_spec)
        if dist < config.distinct_tol:
            continue
        resid = gram_residual(cand, target_gram, design)
        candidates.append((resid, r.index, cand, dist))
    candidates.sort(key=lambda c: (c[0], c[1]))
    if candidates and candidates[0][0] <= config.residual_tol:
        resid, idx, cand, dist = candidates[0]
        return WitnessReport(Outcome.WITNESS_FOUND, cand, resid, target_spec, design, config,
                             converged, idx, dist)
    if candidates:
        resid, idx, cand, dist = candidates[0]
        return WitnessReport(Outcome.NO_WITNESS, cand, resid, target_spec, design, config,
                             converged, idx, dist)
    return WitnessReport(Outcome.NO_WITNESS, None, math.inf, target_spec, design, config, converged)


# ---------------------------------------------------------------------------
# Analytic construction for RBF+periodic on four distances
# ---------------------------------------------------------------------------

def _scalar_roots(fn, t_grid: np.ndarray) -> list[float]:
    vals = np.array([fn(t) for t in t_grid])
    roots = []
    for i in range(len(t_grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(t_grid[i]))
        elif a * b < 0:
            roots.append(float(brentq(fn, t_grid[i], t_grid[i + 1], xtol=1e-15, rtol=1e-15)))
    return roots


def _rbf_roots(x2: np.ndarray, c: np.ndarray, grid: np.ndarray) -> list[float]:
    # sum_i c_i exp(-t x_i^2) = 0 in t = 1/ell^2
    return _scalar_roots(lambda t: float(np.dot(c, np.exp(-t * x2))), grid)


def _periodic_roots(cos: np.ndarray, c: np.ndarray, grid: np.ndarray) -> list[float]:
    # sum_i c_i exp(t cos_i) = 0 in t = 1/s^2, rescaled by exp(-t max cos) against overflow
    cmax = cos.max()
    return _scalar_roots(lambda t: float(np.dot(c, np.exp(t * (cos - cmax)))), grid)


@dataclass(frozen=True)
class PeriodicCounterexample:
    first: MixedKernelSpec
    second: MixedKernelSpec
    coefficients: tuple[float, float, float, float]
    distances: tuple[float, float, float, float]


def _pair_from_roots(x, cos, p, t_rbf, t_per):
    rows = np.array([
        np.exp(-t_rbf[0] * x * x),
        np.exp(t_per[0] * cos),
        np.exp(-t_rbf[1] * x * x),
        np.exp(t_per[1] * cos),
    ])
    # amplitudes (sigma1^2, tau1^2 e^{-t1}, -sigma2^2, -tau2^2 e^{-t2}) span the left null space
    u, sv, _ = np.linalg.svd(rows)
    if sv[2] <= 1e-10 * sv[0] or sv[3] > 1e-9 * sv[0]:
        return None
    y = u[:, 3]
    if y[0] < 0:
        y = -y
    if not (y[0] > 0 and y[1] > 0 and y[2] < 0 and y[3] < 0):
        return None
    y = y / -y[3]
    sig1, sig2 = math.sqrt(y[0]), math.sqrt(-y[2])
    tau1 = math.sqrt(y[1] * math.exp(t_per[0]))
    tau2 = math.sqrt(-y[3] * math.exp(t_per[1]))
    first = rbf_periodic(RbfParams(sig1, 1 / math.sqrt(t_rbf[0])), PeriodicParams(tau1, 1 / math.sqrt(t_per[0]), p))
    second = rbf_periodic(RbfParams(sig2, 1 / math.sqrt(t_rbf[1])), PeriodicParams(tau2, 1 / math.sqrt(t_per[1]), p))
    return first, second


def _solve_pattern(x, p, c, grid):
    cos = np.cos(2 * np.pi * x / p)
    if np.ptp(cos) <= 1e-12:
        raise Infeasible("all four distances share one periodic phase; the periodic generators are collinear")
    rbf = _rbf_roots(x * x, c, grid)
    per = _periodic_roots(cos, c, grid)
    for ta, tb in combinations(sorted(rbf, reverse=True), 2):
        for tp in combinations(per, 2):
            for t_per in (tp, tp[::-1]):
                pair = _pair_from_roots(x, cos, p, (ta, tb), t_per)
                if pair is not None:
                    return pair
    return None


def solve_periodic_counterexample(X4: Sequence[float], p: float,
                                  coefficients: Sequence[float] | None = None,
                                  rng_seed: int = 0, max_patterns: int = 2000) -> PeriodicCounterexample:
    """Construct two distinct RBF+periodic parameter sets with equal kernel sums on four distances.

    With ``coefficients = c`` the generator vector v(x) = (exp(-x²/l1²),
    exp(cos(2πx/p)/s1²), exp(-x²/l2²), exp(cos(2πx/p)/s2²)) must satisfy
    ``sum_i c_i v(x_i) = 0``. That splits into two scalar root problems, one
    in 1/l² and one in 1/s², each solved by bracketing. The amplitudes come
    from the left null vector of the resulting 4 x 4 matrix and must be
    positive; scale is fixed so that the second set's periodic coefficient
    ``tau2² exp(-1/s2²)`` equals 1. Without coefficients, random patterns
    (c1 = 1) are tried until one is feasible.

    Raises
    ------
    Infeasible
        No positive-amplitude solution was found.
    """
    x = np.asarray(sorted(float(v) for v in X4))
    if x.size != 4 or np.any(np.diff(x) <= 0) or x[0] < 0:
        raise ValueError("need four distinct nonnegative distances")
    if p <= 0:
        raise ValueError("period must be positive")
    grid = np.geomspace(1e-6, 1e4, 4000)
    if coefficients is not None:
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (4,) or not np.any(c):
            raise ValueError("coefficients must be four numbers, not all zero")
        c = c / c[0] if c[0] != 0 else c
        pair = _solve_pattern(x, p, c, grid)
        if pair is None:
            raise Infeasible(f"coefficient pattern {tuple(c)} admits no positive-amplitude solution")
        return PeriodicCounterexample(pair[0], pair[1], tuple(map(float, c)), tuple(map(float, x)))
    cos = np.cos(2 * np.pi * x / p)
    if np.ptp(cos) <= 1e-12:
        raise Infeasible("all four distances share one periodic phase; the periodic generators are collinear")
    rng = np.random.default_rng(rng_seed)
    for _ in range(max_patterns):
        c = np.concatenate(([1.0], rng.normal(scale=3.0, size=3)))
        pair = _solve_pattern(x, p, c, grid)
        if pair is not None:
            return PeriodicCounterexample(pair[0], pair[1], tuple(map(float, c)), tuple(map(float, x)))
    raise Infeasible(f"no feasible coefficient pattern among {max_patterns} random draws")


# ---------------------------------------------------------------------------
# Published examples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Reproduction:
    example_id: str
    max_abs_deviation: float
    cross_deviation: float
    tolerance: float
    description: str = field(default="", compare=False)

    @property
    def passed(self) -> bool:
        return self.max_abs_deviation <= self.tolerance and self.cross_deviation <= 2 * self.tolerance

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "max_abs_deviation": self.max_abs_deviation,
            "cross_deviation": self.cross_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def reproduce_paper_examples() -> list[Reproduction]:
    """Rebuild each published Gram matrix from both parameter sets and compare with the printed one."""
    out = []
    for ex in GOLDEN_EXAMPLES:
        g1 = build_gram(ex.first, ex.design)
        g2 = build_gram(ex.second, ex.design)
        dev = max(float(np.max(np.abs(g1 - ex.gram))), float(np.max(np.abs(g2 - ex.gram))))
        cross = float(np.max(np.abs(g1 - g2)))
        out.append(Reproduction(ex.example_id, dev, cross, ex.tolerance, ex.description))
    return out

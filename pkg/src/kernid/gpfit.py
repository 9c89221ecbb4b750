"""Prior sampling, Gaussian log marginal likelihood and multi-start maximum
likelihood for the mixed-kernel models.

Kept deliberately small: enough to show what (non-)identifiability does to
parameter recovery, not a general GP toolkit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _parallel
from .design import Design
from .errors import NotPsd
from .kernels import MixedKernelSpec, PeriodicParams, RbfParams, Variant, build_gram, two_rbf
from .witness import WitnessSearchConfig, nelder_mead_start, relative_distance

JITTER_STEPS = (0.0, 1e-10, 1e-8, 1e-6)
LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class Dataset:
    design: Design
    responses: np.ndarray

    def __post_init__(self):
        y = np.array(self.responses, dtype=float).ravel()
        if y.size != self.design.n:
            raise ValueError(f"{y.size} responses for {self.design.n} design points")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "responses", y)


def jittered_cholesky(k: np.ndarray):
    """Cholesky factor of ``k``, adding 1e-10, 1e-8, 1e-6 x mean diagonal if needed.

    Returns ``(cho_factor result, jitter added)``.
    """
    scale = float(np.mean(np.diag(k)))
    for step in JITTER_STEPS:
        jitter = step * scale
        try:
            kk = k + jitter * np.eye(k.shape[0]) if jitter else k
            return cho_factor(kk, lower=True, check_finite=True), jitter
        except (np.linalg.LinAlgError, ValueError):
            continue
    raise NotPsd("covariance is not positive definite even with 1e-6 relative jitter")


def sample_prior(spec: MixedKernelSpec, design: Design, rng_seed: int = 0) -> Dataset:
    """Draw f ~ N(0, G) over the design and add independent N(0, noise_var) noise."""
    g = build_gram(spec, design)
    (low, _), _ = jittered_cholesky(g)
    rng = np.random.default_rng(rng_seed)
    f = np.tril(low) @ rng.standard_normal(design.n)
    y = f + math.sqrt(spec.noise_var) * rng.standard_normal(design.n)
    return Dataset(design, y)


def log_marginal(spec: MixedKernelSpec, data: Dataset) -> float:
    """log N(y | 0, G + noise_var I), via Cholesky."""
    return _log_marginal_columns(spec, data.design, data.responses[:, None])


def _log_marginal_columns(spec: MixedKernelSpec, design: Design, Y: np.ndarray) -> float:
    # Y holds one independent realisation per column, all on the same design
    k = build_gram(spec, design, include_noise=True)
    cf, _ = jittered_cholesky(k)
    alpha = cho_solve(cf, Y)
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    n, r = Y.shape
    return -0.5 * float(np.sum(Y * alpha)) - 0.5 * r * logdet - 0.5 * r * n * LOG_2PI


def _group_by_design(datasets: Sequence[Dataset]) -> list[tuple[Design, np.ndarray]]:
    groups: dict[Design, list[np.ndarray]] = {}
    for d in datasets:
        groups.setdefault(d.design, []).append(d.responses)
    return [(design, np.column_stack(ys)) for design, ys in groups.items()]


def _spec_from_log(z, variant: Variant, p, noise_var, fit_noise) -> MixedKernelSpec:
    v = np.exp(z)
    nv = float(v[4]) if fit_noise else noise_var
    if variant is Variant.RBF_PERIODIC:
        return MixedKernelSpec(RbfParams(v[0], v[1]), PeriodicParams(v[2], v[3], p), nv)
    return two_rbf(RbfParams(v[0], v[1]), RbfParams(v[2], v[3]), nv)


class NegLogMarginal:
    """Objective over log-parameters; infeasible points score +inf-like."""

    PENALTY = 1e300

    def __init__(self, datasets, variant, p, noise_var, fit_noise):
        self.groups = _group_by_design(datasets)
        self.variant = variant
        self.p = p
        self.noise_var = noise_var
        self.fit_noise = fit_noise

    def spec(self, z) -> MixedKernelSpec:
        return _spec_from_log(z, self.variant, self.p, self.noise_var, self.fit_noise)

    def __call__(self, z) -> float:
        try:
            spec = self.spec(z)
            return -sum(_log_marginal_columns(spec, design, Y) for design, Y in self.groups)
        except (ValueError, NotPsd, OverflowError):
            return self.PENALTY


@dataclass(frozen=True)
class FitResult:
    params: MixedKernelSpec
    neg_log_marginal: float
    converged: bool
    iterations: int
    start_index: int
    jitter: float = 0.0


def _fit_start(task):
    objective, index, x0, bounds, max_iters = task
    return nelder_mead_start(objective, index, x0, bounds, max_iters, xatol=1e-9, fatol=1e-11)


def fit_mle(data: Union[Dataset, Sequence[Dataset]], variant: Variant, p: float | None = None,
            config: WitnessSearchConfig | None = None, noise_var: float | None = None,
            fit_noise: bool = False) -> list[FitResult]:
    """Multi-start maximum likelihood over log-parameters.

    Parameters
    ----------
    data : Dataset or sequence of Dataset
        Several datasets are treated as independent realisations; their
        log marginals add.
    variant : Variant
    p : float, optional
        Known period, required for the RBF+periodic family.
    config : WitnessSearchConfig
        Same multi-start contract as the witness search. A fifth bound is
        used for log noise variance when ``fit_noise`` is set.
    noise_var : float, optional
        Known observational variance (required unless ``fit_noise``).

    Returns
    -------
    list of FitResult
        Converged optima sorted by negative log marginal, with optima closer
        than ``config.distinct_tol`` (relative) to a better one removed.
    """
    config = config or WitnessSearchConfig()
    datasets = [data] if isinstance(data, Dataset) else list(data)
    if not datasets:
        raise ValueError("no data")
    variant = Variant(variant)
    if variant is Variant.RBF_PERIODIC and p is None:
        raise ValueError("the RBF+periodic family needs a known period p")
    if not fit_noise and noise_var is None:
        raise ValueError("give noise_var or set fit_noise")
    k = 5 if fit_noise else 4
    bounds = config.bounds_for(k) if len(config.param_bounds) in (1, k) else config.bounds_for(4) + ((-12.0, 3.0),)
    objective = NegLogMarginal(datasets, variant, p, noise_var, fit_noise)
    b = np.array(bounds)
    rng = np.random.default_rng(config.rng_seed)
    starts = rng.uniform(b[:, 0], b[:, 1], size=(config.starts, k))
    tasks = [(objective, i, x0, bounds, config.max_iters) for i, x0 in enumerate(starts)]
    runs = _parallel.pmap(_fit_start, tasks)

    results = []
    for r in runs:
        if not r.converged or r.fun >= NegLogMarginal.PENALTY:
            continue
        spec = objective.spec(r.x)
        k_mat = build_gram(spec, datasets[0].design, include_noise=True)
        _, jitter = jittered_cholesky(k_mat)
        results.append(FitResult(spec, r.fun, True, r.iterations, r.index, jitter))
    results.sort(key=lambda f: (f.neg_log_marginal, f.start_index))
    kept: list[FitResult] = []
    for fr in results:
        if all(_spec_distance(fr.params, other.params) >= config.distinct_tol for other in kept):
            kept.append(fr)
    return kept


def _spec_distance(a: MixedKernelSpec, b: MixedKernelSpec) -> float:
    d = relative_distance(a, b)
    if a.noise_var and b.noise_var:
        d = max(d, abs(a.noise_var - b.noise_var) / b.noise_var)
    return d

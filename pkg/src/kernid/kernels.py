"""RBF and periodic covariance kernels and Gram matrices of their sums.

Kernels
-------
RBF:       sigma**2 * exp(-r**2 / ell**2)
Periodic:  tau**2 * exp(-2 sin(pi * delta / p)**2 / s**2)

The periodic kernel is only defined for scalar inputs, so mixed
RBF+periodic models are restricted to 1-D designs. Observation noise is
carried on :class:`MixedKernelSpec` for likelihood work but never enters
the identifiability machinery, which compares kernel sums only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .design import Design
from .errors import DimensionMismatch


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class RbfParams:
    sigma: float
    ell: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        object.__setattr__(self, "ell", _positive("ell", self.ell))


@dataclass(frozen=True)
class PeriodicParams:
    tau: float
    s: float
    p: float

    def __post_init__(self):
        for name in ("tau", "s", "p"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))


class Variant(str, enum.Enum):
    RBF_PERIODIC = "rbf_periodic"
    TWO_RBF = "two_rbf"


@dataclass(frozen=True)
class MixedKernelSpec:
    """Sum of two kernels plus an observational noise variance.

    For ``Variant.TWO_RBF`` the components must be in canonical order,
    ``first.ell < second.ell``; use :func:`two_rbf` to sort automatically.
    """

    first: RbfParams
    second: Union[RbfParams, PeriodicParams]
    noise_var: float = 0.0

    def __post_init__(self):
        if not isinstance(self.first, RbfParams):
            raise TypeError("the first component must be an RBF kernel")
        if not isinstance(self.second, (RbfParams, PeriodicParams)):
            raise TypeError("the second component must be an RBF or periodic kernel")
        nv = float(self.noise_var)
        if not (nv >= 0 and math.isfinite(nv)):
            raise ValueError("noise_var must be finite and nonnegative")
        object.__setattr__(self, "noise_var", nv)
        if isinstance(self.second, RbfParams) and not self.first.ell < self.second.ell:
            raise ValueError(
                "two-RBF components must satisfy first.ell < second.ell "
                f"(got {self.first.ell!r}, {self.second.ell!r})"
            )

    @property
    def variant(self) -> Variant:
        return Variant.TWO_RBF if isinstance(self.second, RbfParams) else Variant.RBF_PERIODIC

    @property
    def period(self) -> float | None:
        return self.second.p if isinstance(self.second, PeriodicParams) else None

    def zero_lag(self) -> float:
        """Kernel value at lag zero (the constant Gram diagonal, noise excluded)."""
        amp2 = self.second.tau if self.variant is Variant.RBF_PERIODIC else self.second.sigma
        return self.first.sigma**2 + amp2**2

    def values(self) -> tuple[float, ...]:
        """Free parameters in canonical order: (sigma, ell, tau, s) or (sigma1, ell1, sigma2, ell2)."""
        if self.variant is Variant.RBF_PERIODIC:
            return (self.first.sigma, self.first.ell, self.second.tau, self.second.s)
        return (self.first.sigma, self.first.ell, self.second.sigma, self.second.ell)

    def with_values(self, values) -> "MixedKernelSpec":
        """Rebuild from free parameters (same variant, period and noise); two-RBF is re-sorted."""
        a, b, c, d = (float(v) for v in values)
        if self.variant is Variant.RBF_PERIODIC:
            return MixedKernelSpec(RbfParams(a, b), PeriodicParams(c, d, self.second.p), self.noise_var)
        return two_rbf(RbfParams(a, b), RbfParams(c, d), self.noise_var)

    def to_dict(self) -> dict:
        if self.variant is Variant.RBF_PERIODIC:
            return {
                "variant": self.variant.value,
                "sigma": self.first.sigma,
                "ell": self.first.ell,
                "tau": self.second.tau,
                "s": self.second.s,
                "p": self.second.p,
                "noise_var": self.noise_var,
            }
        return {
            "variant": self.variant.value,
            "sigma1": self.first.sigma,
            "ell1": self.first.ell,
            "sigma2": self.second.sigma,
            "ell2": self.second.ell,
            "noise_var": self.noise_var,
        }


def rbf_periodic(rbf: RbfParams, periodic: PeriodicParams, noise_var: float = 0.0) -> MixedKernelSpec:
    return MixedKernelSpec(rbf, periodic, noise_var)


def two_rbf(a: RbfParams, b: RbfParams, noise_var: float = 0.0) -> MixedKernelSpec:
    """Two-RBF spec with the shorter length-scale placed first."""
    if b.ell < a.ell:
        a, b = b, a
    return MixedKernelSpec(a, b, noise_var)


def eval_rbf(params: RbfParams, r):
    """sigma² exp(-r²/ell²) for a distance (or array of distances) r >= 0."""
    r = np.asarray(r, dtype=float)
    out = params.sigma**2 * np.exp(-(r * r) / params.ell**2)
    return float(out) if out.ndim == 0 else out


def eval_periodic(params: PeriodicParams, delta):
    """tau² exp(-2 sin²(pi delta / p) / s²) for a scalar lag (or array of lags)."""
    delta = np.asarray(delta, dtype=float)
    sn = np.sin(np.pi * delta / params.p)
    out = params.tau**2 * np.exp(-2.0 * sn * sn / params.s**2)
    return float(out) if out.ndim == 0 else out


def _as_point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def eval_mixed(spec: MixedKernelSpec, x, y) -> float:
    """Sum of both component kernels between points ``x`` and ``y`` (noise excluded)."""
    x, y = _as_point(x), _as_point(y)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatch(f"points have shapes {x.shape} and {y.shape}")
    diff = x - y
    r = math.sqrt(float(np.dot(diff, diff)))
    first = eval_rbf(spec.first, r)
    if spec.variant is Variant.TWO_RBF:
        return first + eval_rbf(spec.second, r)
    if x.size != 1:
        raise DimensionMismatch("the periodic kernel is only defined for 1-D inputs")
    return first + eval_periodic(spec.second, float(diff[0]))


def _check_design(spec: MixedKernelSpec, design: Design) -> None:
    if spec.variant is Variant.RBF_PERIODIC and design.dim != 1:
        raise DimensionMismatch(f"RBF+periodic models need a 1-D design, got dim = {design.dim}")


def component_grams(spec: MixedKernelSpec, design: Design) -> tuple[np.ndarray, np.ndarray]:
    """The two component Gram matrices, each filled on the upper triangle and mirrored."""
    _check_design(spec, design)
    n = design.n
    iu, ju = np.triu_indices(n)
    pts = design.points
    diff = pts[iu] - pts[ju]
    r = np.sqrt(np.sum(diff * diff, axis=1))
    upper1 = eval_rbf(spec.first, r)
    if spec.variant is Variant.TWO_RBF:
        upper2 = eval_rbf(spec.second, r)
    else:
        upper2 = eval_periodic(spec.second, diff[:, 0])
    grams = []
    for upper in (upper1, upper2):
        g = np.empty((n, n))
        g[iu, ju] = upper
        g[ju, iu] = upper
        grams.append(g)
    return grams[0], grams[1]


def build_gram(spec: MixedKernelSpec, design: Design, include_noise: bool = False) -> np.ndarray:
    """n x n Gram matrix of the mixed kernel over ``design``.

    Parameters
    ----------
    spec : MixedKernelSpec
    design : Design
        Must be 1-D for the RBF+periodic family.
    include_noise : bool
        Add ``spec.noise_var`` to the diagonal.

    Returns
    -------
    numpy.ndarray
        Exactly symmetric matrix; equals the sum of :func:`component_grams`.
    """
    g1, g2 = component_grams(spec, design)
    g = g1 + g2
    if include_noise and spec.noise_var:
        g[np.diag_indices_from(g)] += spec.noise_var
    return g


def profile_values(spec: MixedKernelSpec, distances: np.ndarray) -> np.ndarray:
    """Mixed-kernel values at nonnegative distances (the periodic part is even in its lag)."""
    out = eval_rbf(spec.first, distances)
    if spec.variant is Variant.TWO_RBF:
        return out + eval_rbf(spec.second, distances)
    return out + eval_periodic(spec.second, distances)


def is_psd(gram: np.ndarray, rel_tol: float = 1e-8) -> bool:
    """Smallest eigenvalue at least ``-rel_tol`` times the largest."""
    w = np.linalg.eigvalsh(gram)
    return bool(w[0] >= -rel_tol * max(abs(w[-1]), 0.0))

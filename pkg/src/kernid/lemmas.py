"""Scalar functions behind the identifiability arguments, and randomized
checkers that try to falsify each supporting claim numerically.

Every checker samples admissible inputs (rejecting points too close to the
boundary of the claim's hypotheses, where the quantities vanish continuously)
and records each sample that violates the claim at a scale-relative
tolerance. An empty violation list means the claim survived the sample.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .design import Design, check_theorem1, check_theorem2, distance_set, find_lemma31_witness
from .errors import ConditionNotMet

DET_TOL = 1e-12
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# Scalar functions
# ---------------------------------------------------------------------------

def fn_I(t, s):
    """t e^{-ts} / (1 - e^{-ts}), written as t / expm1(ts) so that t -> 0 gives 1/s."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    ts = t * s
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = np.where(ts == 0, 1.0 / s, t / np.expm1(ts))
    return float(out) if out.ndim == 0 else out


def fn_h(x, p, ell):
    """(exp(-(x+p)²/l²) - exp(-x²/l²)) / (exp(-p²/l²) - 1).

    Stable form: exp(-x²/l²) * expm1(-(p² + 2xp)/l²) / expm1(-p²/l²).
    """
    x = np.asarray(x, dtype=float)
    l2 = np.asarray(ell, dtype=float) ** 2
    p = np.asarray(p, dtype=float)
    out = np.exp(-x * x / l2) * np.expm1(-(p * p + 2 * x * p) / l2) / np.expm1(-p * p / l2)
    return float(out) if out.ndim == 0 else out


def fn_h_anchored(x, p, ell):
    """(exp(-(x+p)²/l²) - 1) / (exp(-p²/l²) - 1), the x = 0 anchored variant.

    ``fn_h_anchored(x, p, l) == fn_s(x, 1/l, p)``; this is the form for which
    ``1 / fn_h_anchored(-x, p, l) == fn_h_anchored(x, p - x, l)`` holds.
    """
    x = np.asarray(x, dtype=float)
    l2 = np.asarray(ell, dtype=float) ** 2
    p = np.asarray(p, dtype=float)
    out = np.expm1(-(x + p) ** 2 / l2) / np.expm1(-p * p / l2)
    return float(out) if out.ndim == 0 else out


def fn_s(x, y, p):
    """(exp(-(x+p)² y²) - 1) / (exp(-p² y²) - 1); strictly decreasing in y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    y2 = y * y
    out = np.expm1(-(x + p) ** 2 * y2) / np.expm1(-p * p * y2)
    return float(out) if out.ndim == 0 else out


def fn_f(x, A, B):
    """(x^B - x^A) / (x^A - 1) on 0 < x < 1, increasing for 1 < A < B."""
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    out = np.exp(A * lx) * np.expm1((B - A) * lx) / np.expm1(A * lx)
    return float(out) if out.ndim == 0 else out


def exp_pair_matrix(k, l, a, b) -> np.ndarray:
    return np.array([[math.exp(k * a), math.exp(l * a)], [math.exp(k * b), math.exp(l * b)]])


def power_matrix(zeta: Sequence[float], a: float, b: float) -> np.ndarray:
    """Rows (z - 1, z^a - 1, z^b - 1) for each z in ``zeta``."""
    z = np.asarray(zeta, dtype=float)[:, None]
    return np.hstack([z - 1.0, z**a - 1.0, z**b - 1.0])


def gaussian_columns(scales: Sequence[float], xs: Sequence[float]) -> np.ndarray:
    """Matrix whose columns are (exp(-x²/a²), exp(-x²/b²), ...) for each x."""
    s = np.asarray(scales, dtype=float)[:, None]
    x = np.asarray(xs, dtype=float)[None, :]
    return np.exp(-(x * x) / (s * s))


def rbf_periodic_generators(xs, p, ell1, ell2, s1, s2) -> np.ndarray:
    """4 x k matrix with columns (exp(-x²/l1²), exp(cos(2πx/p)/s1²), exp(-x²/l2²), exp(cos(2πx/p)/s2²))."""
    x = np.asarray(xs, dtype=float)
    c = np.cos(2 * np.pi * x / p)
    return np.array([np.exp(-x * x / ell1**2), np.exp(c / s1**2), np.exp(-x * x / ell2**2), np.exp(c / s2**2)])


def scaled_det_ratio(m: np.ndarray) -> float:
    """|det m| divided by the product of its row norms (Hadamard ratio, in [0, 1])."""
    norms = np.linalg.norm(m, axis=1)
    return float(abs(np.linalg.det(m)) / np.prod(norms))


def rank_ratio(m: np.ndarray) -> float:
    """Smallest over largest singular value after scaling each row to unit max-norm."""
    m = m / np.max(np.abs(m), axis=1, keepdims=True)
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1] / sv[0])


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

class SampleMode(str, enum.Enum):
    GRID = "grid"
    RANDOM_UNIFORM = "random_uniform"


@dataclass(frozen=True)
class GridSpec:
    """Where and how densely to sample a claim's variables.

    In ``GRID`` mode every variable gets ``samples_per_axis`` evenly spaced
    values and the cartesian product is walked. In ``RANDOM_UNIFORM`` mode
    ``samples_per_axis`` is the number of admissible draws requested.
    ``ranges`` maps variable names to ``(low, high)``; missing names fall
    back to each checker's defaults.
    """

    samples_per_axis: int = 10_000
    ranges: dict = field(default_factory=dict)
    rng_seed: int = 0
    mode: SampleMode = SampleMode.RANDOM_UNIFORM

    def __post_init__(self):
        if self.samples_per_axis < 1:
            raise ValueError("samples_per_axis must be positive")
        for name, (lo, hi) in self.ranges.items():
            if not lo < hi:
                raise ValueError(f"range for {name!r} needs low < high, got ({lo}, {hi})")

    def range_for(self, name: str, default: tuple[float, float]) -> tuple[float, float]:
        return tuple(self.ranges.get(name, default))


class LemmaId(str, enum.Enum):
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"
    L5 = "L5"
    L6 = "L6"
    L7 = "L7"
    L8_9 = "L8+L9"


LEMMA_CLAIMS = {
    LemmaId.L2: "exponential pairs (e^{ka}, e^{kb}), (e^{la}, e^{lb}) are independent for k != l, a != b",
    LemmaId.L3: "I(t, s) = t e^{-ts}/(1 - e^{-ts}) strictly decreases in t",
    LemmaId.L4: "s(x, y; p) strictly decreases in y; h(q; P, l) strictly monotone in l; anchored reciprocal identity",
    LemmaId.L5: "RBF+periodic generators have rank 4 on a period-multiple quadruple when l1 != l2, s1 != s2",
    LemmaId.L6: "det B(z1, z2, z3; a, b) != 0 for distinct z_i > 1 and b > a > 1",
    LemmaId.L7: "four Gaussian generators with distinct length-scales have rank 4 on {0, a1, a2, a3}",
    LemmaId.L8_9: "three Gaussian columns are independent; f(x) = (x^B - x^A)/(x^A - 1) increases on (0, 1)",
}


@dataclass(frozen=True)
class LemmaCheckResult:
    lemma_id: LemmaId
    cases_run: int
    violations: tuple = ()
    tolerance: float = DET_TOL

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id.value,
            "claim": LEMMA_CLAIMS[self.lemma_id],
            "cases_run": self.cases_run,
            "violations": [{"inputs": i, "observed": o} for i, o in self.violations[:20]],
            "violation_count": len(self.violations),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _samples(grid: GridSpec, names: Sequence[str], defaults: dict,
             admissible: Callable[[dict], bool], max_tries_factor: int = 50):
    """Yield admissible variable assignments according to ``grid``."""
    ranges = [grid.range_for(n, defaults[n]) for n in names]
    if grid.mode is SampleMode.GRID:
        axes = [np.linspace(lo, hi, grid.samples_per_axis) for lo, hi in ranges]
        for combo in itertools.product(*axes):
            point = dict(zip(names, map(float, combo)))
            if admissible(point):
                yield point
        return
    rng = np.random.default_rng(grid.rng_seed)
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    want = grid.samples_per_axis
    got = 0
    tries = 0
    while got < want and tries < want * max_tries_factor:
        batch = rng.uniform(lo, hi, size=(max(64, want - got), len(names)))
        for row in batch:
            tries += 1
            point = dict(zip(names, map(float, row)))
            if admissible(point):
                yield point
                got += 1
                if got == want:
                    return


def _sep(a: float, b: float, frac: float = 0.01) -> bool:
    return abs(a - b) >= frac * max(abs(a), abs(b))


# ---------------------------------------------------------------------------
# Checkers
# ---------------------------------------------------------------------------

def check_lemma2(grid: GridSpec | None = None) -> LemmaCheckResult:
    """det [[e^{ka}, e^{la}], [e^{kb}, e^{lb}]] must not vanish when k != l and a != b."""
    grid = grid or GridSpec()
    defaults = {"k": (-3.0, 3.0), "l": (-3.0, 3.0), "a": (-3.0, 3.0), "b": (-3.0, 3.0)}

    def ok(v):
        return abs(v["k"] - v["l"]) >= 0.01 and abs(v["a"] - v["b"]) >= 0.01

    cases, bad = 0, []
    for v in _samples(grid, ["k", "l", "a", "b"], defaults, ok):
        cases += 1
        r = scaled_det_ratio(exp_pair_matrix(v["k"], v["l"], v["a"], v["b"]))
        if not r > DET_TOL:
            bad.append((v, {"scaled_det": r}))
    return LemmaCheckResult(LemmaId.L2, cases, tuple(bad), DET_TOL)


def check_lemma3(grid: GridSpec | None = None) -> LemmaCheckResult:
    """I(t2, s) < I(t1, s) for t2 > t1 > 0."""
    grid = grid or GridSpec()
    defaults = {"t1": (1e-3, 20.0), "t2": (1e-3, 20.0), "s": (1e-2, 10.0)}

    def ok(v):
        return v["t2"] >= v["t1"] * 1.01

    cases, bad = 0, []
    for v in _samples(grid, ["t1", "t2", "s"], defaults, ok):
        cases += 1
        i1, i2 = fn_I(v["t1"], v["s"]), fn_I(v["t2"], v["s"])
        if not i2 < i1:
            bad.append((v, {"I_t1": i1, "I_t2": i2}))
    return LemmaCheckResult(LemmaId.L3, cases, tuple(bad), 0.0)


def check_lemma4(grid: GridSpec | None = None) -> LemmaCheckResult:
    """Monotonicity of s in y and of h in l, s > 1, and the anchored reciprocal identity."""
    grid = grid or GridSpec()
    defaults = {"x": (0.01, 5.0), "p": (0.1, 2.0), "y1": (0.05, 2.0), "y2": (0.05, 2.0)}

    def ok(v):
        return v["y2"] >= v["y1"] * 1.01

    cases, bad = 0, []
    for v in _samples(grid, ["x", "p", "y1", "y2"], defaults, ok):
        cases += 1
        x, p, y1, y2 = v["x"], v["p"], v["y1"], v["y2"]
        s1, s2 = fn_s(x, y1, p), fn_s(x, y2, p)
        if not (s2 < s1 and s2 > 1.0):
            bad.append((v, {"s_y1": s1, "s_y2": s2}))
        # read (x, p) as (q, P) and (1/y) as length-scales for h
        h1, h2 = fn_h(x, p, 1 / y2), fn_h(x, p, 1 / y1)
        if not h1 < h2:
            bad.append((v, {"h_l_small": h1, "h_l_large": h2}))
        # 0 < u < P for the reciprocal identity
        u = p * min(x / 5.0, 0.99)
        prod = fn_h_anchored(-u, p, 1 / y1) * fn_h_anchored(u, p - u, 1 / y1)
        if not abs(prod - 1.0) <= 1e-12:
            bad.append((v, {"reciprocal_product": prod}))
    return LemmaCheckResult(LemmaId.L4, cases, tuple(bad), 1e-12)


def check_lemma6(grid: GridSpec | None = None) -> LemmaCheckResult:
    """det B(z1, z2, z3; a, b) != 0 for distinct z_i > 1 and b > a > 1."""
    grid = grid or GridSpec()
    defaults = {"z1": (1.01, 5.0), "z2": (1.01, 5.0), "z3": (1.01, 5.0), "a": (1.01, 4.0), "b": (1.02, 5.0)}

    def ok(v):
        z = (v["z1"], v["z2"], v["z3"])
        gaps = min(abs(z[0] - z[1]), abs(z[1] - z[2]), abs(z[2] - z[0]))
        return gaps >= 0.01 and v["b"] - v["a"] >= 0.01 and v["a"] > 1.0

    cases, bad = 0, []
    for v in _samples(grid, ["z1", "z2", "z3", "a", "b"], defaults, ok):
        cases += 1
        r = scaled_det_ratio(power_matrix((v["z1"], v["z2"], v["z3"]), v["a"], v["b"]))
        if not r > DET_TOL:
            bad.append((v, {"scaled_det": r}))
    return LemmaCheckResult(LemmaId.L6, cases, tuple(bad), DET_TOL)


def check_lemma8_9(grid: GridSpec | None = None) -> LemmaCheckResult:
    """Three Gaussian columns at distinct points are independent, and f increases on (0, 1)."""
    grid = grid or GridSpec()
    names = ["a", "b", "c", "x1", "x2", "x3", "u1", "u2", "A", "B"]
    defaults = {
        "a": (1.0, 3.0), "b": (1.0, 3.0), "c": (1.0, 3.0),
        "x1": (0.3, 3.0), "x2": (0.3, 3.0), "x3": (0.3, 3.0),
        "u1": (0.01, 0.99), "u2": (0.01, 0.99), "A": (1.01, 4.0), "B": (1.02, 5.0),
    }

    def ok(v):
        sc = (v["a"], v["b"], v["c"])
        xs = sorted((v["x1"], v["x2"], v["x3"]))
        return (
            all(_sep(s, t) for s, t in itertools.combinations(sc, 2))
            and xs[1] - xs[0] >= 0.01 * xs[2] and xs[2] - xs[1] >= 0.01 * xs[2]
            and v["u2"] - v["u1"] >= 0.01
            and v["B"] - v["A"] >= 0.01
        )

    cases, bad = 0, []
    for v in _samples(grid, names, defaults, ok):
        cases += 1
        m = gaussian_columns((v["a"], v["b"], v["c"]), sorted((v["x1"], v["x2"], v["x3"])))
        r = scaled_det_ratio(m)
        if not r > DET_TOL:
            bad.append((v, {"scaled_det": r}))
        f1, f2 = fn_f(v["u1"], v["A"], v["B"]), fn_f(v["u2"], v["A"], v["B"])
        if not f1 < f2:
            bad.append((v, {"f_u1": f1, "f_u2": f2}))
    return LemmaCheckResult(LemmaId.L8_9, cases, tuple(bad), DET_TOL)


def check_rank_lemmas(designs: Sequence[Design], p: float | None = None,
                      grid: GridSpec | None = None) -> LemmaCheckResult:
    """Numerical rank 4 of the generator matrices on each design.

    With a period ``p`` the RBF+periodic generators are evaluated on the
    design's period-multiple quadruple for sampled l1 != l2, s1 != s2.
    Without one, four Gaussian generators with distinct length-scales are
    evaluated on {0, a1, a2, a3}, the three smallest positive distances.
    Length-scales are sampled relative to the largest distance used, ``D``:
    ``l_rel`` ranges over multiples of ``D``.

    Raises
    ------
    ConditionNotMet
        If a design fails the corresponding sufficient condition.
    """
    grid = grid or GridSpec(samples_per_axis=2_000)
    if p is not None:
        return _rank_rbf_periodic(designs, p, grid)
    return _rank_two_rbf(designs, grid)


def _rank_rbf_periodic(designs, p, grid):
    defaults = {"l1_rel": (0.25, 2.0), "l2_rel": (0.25, 2.0), "s1": (0.5, 3.0), "s2": (0.5, 3.0)}

    def ok(v):
        return _sep(v["l1_rel"], v["l2_rel"]) and _sep(v["s1"], v["s2"])

    cases, bad = 0, []
    for k, design in enumerate(designs):
        X = distance_set(design)
        if not check_theorem1(X, p).holds:
            raise ConditionNotMet(f"design {k} has no period-multiple / non-multiple distance pair for p = {p}")
        quad = np.array(find_lemma31_witness(X, p).members)
        D = quad.max()
        sub = GridSpec(grid.samples_per_axis, grid.ranges, grid.rng_seed + k, grid.mode)
        for v in _samples(sub, ["l1_rel", "l2_rel", "s1", "s2"], defaults, ok):
            cases += 1
            m = rbf_periodic_generators(quad, p, v["l1_rel"] * D, v["l2_rel"] * D, v["s1"], v["s2"])
            r = rank_ratio(m)
            if not r > RANK_TOL:
                bad.append(({"design": k, **v}, {"rank_ratio": r}))
    return LemmaCheckResult(LemmaId.L5, cases, tuple(bad), RANK_TOL)


def _rank_two_rbf(designs, grid):
    names = ["l1_rel", "l2_rel", "l3_rel", "l4_rel"]
    defaults = {n: (0.3, 3.0) for n in names}

    def ok(v):
        ls = sorted(v.values())
        return all(b >= 1.1 * a for a, b in zip(ls, ls[1:]))

    cases, bad = 0, []
    for k, design in enumerate(designs):
        X = distance_set(design)
        if not check_theorem2(X).holds:
            raise ConditionNotMet(f"design {k} has only {len(X)} distinct distances")
        xs = np.array(X.values[:4])
        D = xs.max()
        sub = GridSpec(grid.samples_per_axis, grid.ranges, grid.rng_seed + k, grid.mode)
        for v in _samples(sub, names, defaults, ok):
            cases += 1
            m = gaussian_columns([v[n] * D for n in names], xs)
            r = rank_ratio(m)
            if not r > RANK_TOL:
                bad.append(({"design": k, **v}, {"rank_ratio": r}))
    return LemmaCheckResult(LemmaId.L7, cases, tuple(bad), RANK_TOL)


DEFAULT_RANK_DESIGNS_PERIODIC = (Design([0, 3, 7, 10]), Design([0, 3, 7]), Design([0, 3, 7, 10, 14, 20]))
DEFAULT_RANK_PERIOD = 7.0
DEFAULT_RANK_DESIGNS_TWO_RBF = (Design([0, 1, 2, 3]), Design([0, 2, 3, 4]), Design([0, 1, 1.5, 5]))


def run_all(samples: int = 10_000, seed: int = 0) -> list[LemmaCheckResult]:
    """Every checker with ``samples`` random draws each, seeded from ``seed``."""
    if samples < 1:
        raise ValueError("samples must be positive")

    def g(offset):
        return GridSpec(samples_per_axis=samples, rng_seed=seed + offset)

    per_design = -(-samples // len(DEFAULT_RANK_DESIGNS_PERIODIC))
    return [
        check_lemma2(g(0)),
        check_lemma3(g(1)),
        check_lemma4(g(2)),
        check_lemma6(g(3)),
        check_lemma8_9(g(4)),
        check_rank_lemmas(DEFAULT_RANK_DESIGNS_PERIODIC, DEFAULT_RANK_PERIOD,
                          GridSpec(samples_per_axis=per_design, rng_seed=seed + 5)),
        check_rank_lemmas(DEFAULT_RANK_DESIGNS_TWO_RBF, None,
                          GridSpec(samples_per_axis=per_design, rng_seed=seed + 6)),
    ]

"""Observation designs, their pairwise-distance sets, and the
identifiability conditions for the two mixed-kernel families.

A report that ``certifies`` is a sufficient condition only. A report that
does not certify leaves identifiability undetermined; it never proves the
opposite. Use :func:`kernid.witness.find_witness` to look for an explicit
counterexample. For the RBF+periodic family the bare distance condition
(``holds``) is weaker than certification, which also needs a
{0, mp, q, mp + q} quadruple in X.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import NotFound

DEFAULT_DEDUP_TOL = 1e-9
DEFAULT_DIV_TOL = 1e-9


class Design:
    """Ordered observation points in ``dim``-dimensional space.

    ``points`` may be a flat sequence of scalars (a 1-D design) or a
    sequence of equal-length coordinate rows.
    """

    __slots__ = ("_points", "labels")

    def __init__(self, points, labels: Sequence[str] | None = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("a design needs at least one point with at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("design coordinates must be finite")
        if labels is not None and len(labels) != arr.shape[0]:
            raise ValueError("labels must match the number of points")
        arr.setflags(write=False)
        self._points = arr
        self.labels = tuple(labels) if labels is not None else None

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def n(self) -> int:
        return self._points.shape[0]

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        if self.dim == 1:
            return f"Design({self._points[:, 0].tolist()})"
        return f"Design({self._points.tolist()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Design) and np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def distance_matrix(self) -> np.ndarray:
        """Euclidean distances, computed on the upper triangle and mirrored."""
        n = self.n
        iu, ju = np.triu_indices(n, k=1)
        out = np.zeros((n, n))
        diff = self._points[iu] - self._points[ju]
        d = np.sqrt(np.sum(diff * diff, axis=1))
        out[iu, ju] = d
        out[ju, iu] = d
        return out

    def distance_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact distinct distances over all n² ordered pairs and their multiplicities.

        Every kernel in this package is stationary and even, so a Gram matrix
        is fully determined by its values at these distances.
        """
        n = self.n
        iu, ju = np.triu_indices(n, k=1)
        diff = self._points[iu] - self._points[ju]
        d = np.sqrt(np.sum(diff * diff, axis=1))
        vals, counts = np.unique(d, return_counts=True)
        counts = 2 * counts
        if vals.size and vals[0] == 0.0:
            counts[0] += n
        else:
            vals = np.concatenate(([0.0], vals))
            counts = np.concatenate(([n], counts))
        return vals, counts


@dataclass(frozen=True)
class DistanceSet:
    """Sorted, deduplicated set of pairwise distances (the set X)."""

    values: tuple[float, ...]
    dedup_tol: float = DEFAULT_DEDUP_TOL

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    @property
    def cardinality(self) -> int:
        return len(self.values)

    def find(self, value: float) -> float | None:
        """Return the member matching ``value`` within tolerance, else None."""
        tol = max(self.dedup_tol, 64 * np.finfo(float).eps * max(1.0, abs(value)))
        i = int(np.searchsorted(self.values, value))
        for j in (i - 1, i):
            if 0 <= j < len(self.values) and abs(self.values[j] - value) <= tol:
                return self.values[j]
        return None

    def __contains__(self, value) -> bool:
        return self.find(float(value)) is not None


def merge_distances(raw: Iterable[float], dedup_tol: float = DEFAULT_DEDUP_TOL) -> DistanceSet:
    """Sort ``raw`` and merge values lying within ``dedup_tol`` of a cluster's first member."""
    if dedup_tol < 0:
        raise ValueError("dedup_tol must be nonnegative")
    merged: list[float] = []
    for v in sorted(float(x) for x in raw):
        if v < 0:
            raise ValueError("distances must be nonnegative")
        if merged and v - merged[-1] <= dedup_tol:
            continue
        merged.append(v)
    return DistanceSet(tuple(merged), dedup_tol)


def distance_set(design: Design, dedup_tol: float = DEFAULT_DEDUP_TOL) -> DistanceSet:
    """The set X of all pairwise Euclidean distances, including the i = j zeros.

    >>> distance_set(Design([1, 8, 15])).values
    (0.0, 7.0, 14.0)
    """
    return merge_distances(design.distance_matrix().ravel(), dedup_tol)


class Theorem(str, enum.Enum):
    RBF_PERIODIC = "rbf_periodic"
    TWO_RBF = "two_rbf"


class Verdict(str, enum.Enum):
    CONDITION_HOLDS = "condition_holds"
    CONDITION_FAILS = "condition_fails"


FAILS_WORDING = (
    "sufficient condition not met - identifiability undetermined; "
    "run `witness` to search for a counterexample"
)


COLLAPSED_WORDING = (
    "every period-multiple quadruple collapses to three distances {0, q, 2q}, "
    "too few to pin down four parameters; run `witness` to search for a counterexample"
)

SECOND_SHAPE_WORDING = (
    "X has no {0, mp, q, mp + q} quadruple; {0, q, mp - q, mp} alone does not rule out "
    "two length-scales with equal Gram matrices - identifiability undetermined; "
    "run `witness` to search for a counterexample"
)


class QuadrupleKind(str, enum.Enum):
    """Best period-multiple quadruple available in X, strongest first."""

    FIRST_SHAPE = "zero_mp_q_mp+q"   # certifies identifiability
    SECOND_SHAPE = "zero_q_mp-q_mp"  # four distances, but the rank argument can fail
    COLLAPSED = "collapsed"          # {0, q, 2q}: three distances
    NONE = "none"


@dataclass(frozen=True)
class CheckReport:
    """Verdict of a sufficient-condition check plus the evidence behind it.

    For the RBF+periodic check ``alpha``/``beta`` hold the smallest qualifying
    period multiple and non-multiple, and ``missing`` names the clause that
    failed. ``quadruple`` grades the best period-multiple quadruple in X:
    only {0, mp, q, mp + q} certifies identifiability. With nothing better
    than {0, q, mp - q, mp}, distinct length-scales can share a Gram matrix,
    and the collapsed {0, q, 2q} case is never identifiable. ``certifies``
    folds this into a single answer. For the two-RBF check ``distances`` and
    ``cardinality`` describe X.
    """

    theorem: Theorem
    verdict: Verdict
    alpha: float | None = None
    beta: float | None = None
    missing: tuple[str, ...] = ()
    distances: tuple[float, ...] | None = None
    cardinality: int | None = None
    period: float | None = None
    quadruple: QuadrupleKind = QuadrupleKind.NONE

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.CONDITION_HOLDS

    @property
    def collapsed(self) -> bool:
        return self.quadruple is QuadrupleKind.COLLAPSED

    @property
    def certifies(self) -> bool:
        """True when the design provably identifies the parameters."""
        if self.theorem is Theorem.TWO_RBF:
            return self.holds
        return self.holds and self.quadruple is QuadrupleKind.FIRST_SHAPE

    def summary(self) -> str:
        if self.theorem is Theorem.RBF_PERIODIC:
            head = f"RBF+periodic (p = {self.period!r}): "
            if not self.holds:
                return head + "; ".join(self.missing) + " - " + FAILS_WORDING
            head += f"condition holds with alpha = {self.alpha!r}, beta = {self.beta!r}"
            if self.certifies:
                return head
            return head + ", but " + (COLLAPSED_WORDING if self.collapsed else SECOND_SHAPE_WORDING)
        head = f"2-RBF: |X| = {self.cardinality}"
        if self.holds:
            return head + " >= 4, condition holds"
        return head + " < 4 - " + FAILS_WORDING

    def to_dict(self) -> dict:
        out = {"theorem": self.theorem.value, "verdict": self.verdict.value, "certifies": self.certifies}
        if self.theorem is Theorem.RBF_PERIODIC:
            out.update(period=self.period, alpha=self.alpha, beta=self.beta, missing=list(self.missing),
                       quadruple=self.quadruple.value)
        else:
            out.update(distances=list(self.distances or ()), cardinality=self.cardinality)
        return out


def _period_ratio(value: float, p: float) -> tuple[float, int]:
    r = value / p
    k = int(round(r))
    return abs(r - k), k


def is_period_multiple(value: float, p: float, div_tol: float = DEFAULT_DIV_TOL) -> bool:
    """True when ``value / p`` is a positive integer within ``div_tol``. Zero never qualifies."""
    if value <= 0:
        return False
    dev, k = _period_ratio(value, p)
    return k >= 1 and dev <= div_tol


def check_theorem1(X: DistanceSet, p: float, div_tol: float = DEFAULT_DIV_TOL) -> CheckReport:
    """Does X contain a positive period multiple alpha and a positive non-multiple beta?

    ``holds`` answers exactly that question. Use ``certifies`` for the
    identifiability verdict, which also needs a {0, mp, q, mp + q} quadruple.
    """
    if p <= 0:
        raise ValueError("period must be positive")
    positive = [x for x in X.values if x > 0]
    alphas = [x for x in positive if is_period_multiple(x, p, div_tol)]
    betas = [x for x in positive if not is_period_multiple(x, p, div_tol)]
    missing = []
    if not alphas:
        missing.append("no positive period-multiple distance")
    if not betas:
        missing.append("no non-multiple distance")
    kind = QuadrupleKind.NONE
    if not missing:
        w = _best_quadruple(X, p, div_tol)
        if w is not None:
            kind = QuadrupleKind(w.shape.value) if w.distinct else QuadrupleKind.COLLAPSED
    return CheckReport(
        theorem=Theorem.RBF_PERIODIC,
        verdict=Verdict.CONDITION_FAILS if missing else Verdict.CONDITION_HOLDS,
        alpha=alphas[0] if alphas else None,
        beta=betas[0] if betas else None,
        missing=tuple(missing),
        period=float(p),
        quadruple=kind,
    )


def check_theorem2(X: DistanceSet) -> CheckReport:
    """Two-RBF condition: at least four distinct distances, zero included."""
    card = len(X)
    return CheckReport(
        theorem=Theorem.TWO_RBF,
        verdict=Verdict.CONDITION_HOLDS if card >= 4 else Verdict.CONDITION_FAILS,
        distances=X.values,
        cardinality=card,
    )


class WitnessShape(str, enum.Enum):
    ZERO_MP_Q_MPQ = "zero_mp_q_mp+q"  # {0, mp, q, mp+q}
    ZERO_Q_MPQ_MP = "zero_q_mp-q_mp"  # {0, q, mp-q, mp}


@dataclass(frozen=True)
class Lemma31Witness:
    """A period-multiple quadruple of distances found in X."""

    shape: WitnessShape
    m: int
    q: float
    members: tuple[float, float, float, float]
    period: float = field(default=1.0)

    @property
    def distinct(self) -> bool:
        """False when mp - q == q and the quadruple is really three distances."""
        return len(set(self.members)) == 4

    def to_dict(self) -> dict:
        return {"shape": self.shape.value, "m": self.m, "q": self.q, "members": list(self.members),
                "distinct": self.distinct}


def find_lemma31_witness(X: DistanceSet, p: float, div_tol: float = DEFAULT_DIV_TOL) -> Lemma31Witness:
    """Exhaustive search for {0, mp, q, mp+q} or {0, q, mp-q, mp} inside X.

    The first shape is preferred over the second, a distinct second-shape
    quadruple over a collapsed one (mp = 2q). Within each tier candidates are
    tried by smallest m, then smallest q.

    Raises
    ------
    NotFound
        If no quadruple exists; in particular whenever :func:`check_theorem1` fails.
    """
    if p <= 0:
        raise ValueError("period must be positive")
    w = _best_quadruple(X, p, div_tol)
    if w is None:
        raise NotFound("no period-multiple quadruple in X")
    return w


def _best_quadruple(X: DistanceSet, p: float, div_tol: float) -> Lemma31Witness | None:
    zero = X.values[0] if X.values and X.values[0] == 0.0 else X.find(0.0)
    if zero is None:
        return None
    positive = [x for x in X.values if x > 0]
    multiples = [(int(round(a / p)), a) for a in positive if is_period_multiple(a, p, div_tol)]
    nonmult = [q for q in positive if not is_period_multiple(q, p, div_tol)]
    pairs = [(m, a, q) for m, a in multiples for q in nonmult]
    for m, a, q in pairs:
        s = X.find(a + q)
        if s is not None:
            return Lemma31Witness(WitnessShape.ZERO_MP_Q_MPQ, m, q, (zero, a, q, s), float(p))
    for allow_collapsed in (False, True):
        for m, a, q in pairs:
            d = X.find(a - q) if q < a else None
            if d is not None and (allow_collapsed or d != q):
                return Lemma31Witness(WitnessShape.ZERO_Q_MPQ_MP, m, q, (zero, q, d, a), float(p))
    return None

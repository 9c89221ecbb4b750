"""Published non-identifiable configurations and their Gram matrices.

Each entry pairs a design with two distinct parameter sets that produce the
same mixed Gram matrix, together with the matrix as printed (to the
precision printed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import Design
from .kernels import MixedKernelSpec, PeriodicParams, RbfParams, rbf_periodic, two_rbf


@dataclass(frozen=True)
class GoldenExample:
    example_id: str
    design: Design
    first: MixedKernelSpec
    second: MixedKernelSpec
    gram: np.ndarray
    tolerance: float
    description: str


def _all_multiples() -> GoldenExample:
    p = 7.0
    design = Design([1, 8, 15, 22, 29, 36])
    first = rbf_periodic(RbfParams(1.0, 1.0), PeriodicParams(1.0, 1.0, p))
    second = rbf_periodic(RbfParams(1.0, 1.0), PeriodicParams(1.0, 2.0, p))
    gram = np.ones((6, 6)) + np.eye(6)
    return GoldenExample(
        "rbf_periodic_all_multiples", design, first, second, gram, 1e-12,
        "RBF+periodic, every distance a period multiple: smoothness s is a flat direction",
    )


def _no_multiples() -> GoldenExample:
    p = 4.0
    design = Design([0, 1, 2, 3])
    first = rbf_periodic(RbfParams(1.5720871, 1.0045602), PeriodicParams(1.4284245, 1.2011224, p))
    second = rbf_periodic(RbfParams(1.2295748, 1.4468554), PeriodicParams(1.7320508, 0.9540646, p))
    d, a, b, c = 4.5118543, 1.9376702, 0.5570357, 1.0205292
    gram = np.array([[d, a, b, c], [a, d, a, b], [b, a, d, a], [c, b, a, d]])
    return GoldenExample(
        "rbf_periodic_no_multiples", design, first, second, gram, 5e-7,
        "RBF+periodic, no positive period multiple among the distances (7-digit parameters)",
    )


OCTAHEDRON = [
    (1.0, 1.0, 0.0),
    (1.0, -1.0, 0.0),
    (-1.0, 1.0, 0.0),
    (-1.0, -1.0, 0.0),
    (0.0, 0.0, math.sqrt(2.0)),
    (0.0, 0.0, -math.sqrt(2.0)),
]

# Length-scales as printed, 1/sqrt(log k). With those the two sums disagree
# off the diagonal; the printed integer matrix needs 2/sqrt(log k).
OCTAHEDRON_PRINTED_ELLS = {
    "first": (1 / math.sqrt(math.log(4)), 1 / math.sqrt(math.log(16))),
    "second": (1 / math.sqrt(math.log(9)), 1 / math.sqrt(math.log(25))),
}


def _octahedron() -> GoldenExample:
    r15 = math.sqrt(15.0)
    first = two_rbf(RbfParams(24.0, 2 / math.sqrt(math.log(4))), RbfParams(32 * r15, 2 / math.sqrt(math.log(16))))
    second = two_rbf(RbfParams(81.0, 2 / math.sqrt(math.log(9))), RbfParams(25 * r15, 2 / math.sqrt(math.log(25))))
    d, a, b = 15936.0, 1104.0, 96.0
    gram = np.array([
        [d, a, a, b, a, a],
        [a, d, b, a, a, a],
        [a, b, d, a, a, a],
        [b, a, a, d, a, a],
        [a, a, a, a, d, b],
        [a, a, a, a, b, d],
    ])
    return GoldenExample(
        "two_rbf_octahedron", Design(OCTAHEDRON), first, second, gram, 1e-9,
        "2-RBF on six 3-D points with only three distinct distances",
    )


def octahedron_printed_specs() -> tuple[MixedKernelSpec, MixedKernelSpec]:
    """The two-RBF parameter sets with length-scales exactly as printed."""
    r15 = math.sqrt(15.0)
    e = OCTAHEDRON_PRINTED_ELLS
    return (
        two_rbf(RbfParams(24.0, e["first"][0]), RbfParams(32 * r15, e["first"][1])),
        two_rbf(RbfParams(81.0, e["second"][0]), RbfParams(25 * r15, e["second"][1])),
    )


ALL_MULTIPLES = _all_multiples()
NO_MULTIPLES = _no_multiples()
TWO_RBF_OCTAHEDRON = _octahedron()
GOLDEN_EXAMPLES = (ALL_MULTIPLES, NO_MULTIPLES, TWO_RBF_OCTAHEDRON)

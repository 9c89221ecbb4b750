"""Identifiability of mixed-kernel Gaussian process regression.

Kernels, pairwise-distance conditions, witness search for non-identifiable
parameter pairs, executable checks of the supporting inequalities, and a
small maximum-likelihood toolkit.
"""

from .design import (
    CheckReport,
    Design,
    DistanceSet,
    Lemma31Witness,
    QuadrupleKind,
    Theorem,
    Verdict,
    WitnessShape,
    check_theorem1,
    check_theorem2,
    distance_set,
    find_lemma31_witness,
    is_period_multiple,
    merge_distances,
)
from .errors import (
    ConditionNotMet,
    DimensionMismatch,
    Infeasible,
    InvalidBounds,
    KernidError,
    NotFound,
    NotPsd,
)
from .gpfit import Dataset, FitResult, fit_mle, log_marginal, sample_prior
from .kernels import (
    MixedKernelSpec,
    PeriodicParams,
    RbfParams,
    Variant,
    build_gram,
    component_grams,
    eval_mixed,
    eval_periodic,
    eval_rbf,
    is_psd,
    rbf_periodic,
    two_rbf,
)
from .lemmas import (
    GridSpec,
    LemmaCheckResult,
    LemmaId,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    check_lemma6,
    check_lemma8_9,
    check_rank_lemmas,
    fn_f,
    fn_h,
    fn_I,
    fn_s,
)
from .witness import (
    Outcome,
    Reproduction,
    WitnessReport,
    WitnessSearchConfig,
    find_witness,
    gram_residual,
    reproduce_paper_examples,
    solve_periodic_counterexample,
)

__version__ = "0.1.0"

"""Tell two black-box models apart with a few discriminating binary questions."""

from .experiment import (
    AccuracyCurve,
    DistinguishCdf,
    RunSummary,
    aggregate_runs,
    binomial_reference,
    cdf_to_accuracy,
    first_discriminating_index,
    monte_carlo_true_negative,
    run_experiment,
    run_pairwise,
    scalability_sweep,
)
from .heuristics import (
    OrderedQuestionList,
    ScoreVector,
    order_questions,
    score,
    score_random,
    score_recursive_similarity,
    score_separability,
    separability,
    similarity,
)
from .interrogator import Endpoint, Verdict, matrix_oracle, remote_oracle, sequential_test
from .kernels import BACKEND
from .matrix import (
    Partition,
    RawAnswerSet,
    ResponseMatrix,
    binarize,
    correct_count_histogram,
    hamming_distance_matrix,
    load_matrix,
    partition_of,
    save_matrix,
)
from .simulation import PopulationSpec, gen_clones, gen_irt, gen_uniform, generate
from .theory import (
    balanced_ordering,
    brute_force_best_set,
    complete_model_set,
    optimal_cdf_finite,
    optimal_cdf_infinite,
    split_pair_count,
    theorem1_check,
)

__version__ = "0.1.0"

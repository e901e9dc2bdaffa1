"""Discovery of latent selection, direct, and confounded dependencies in sequences."""

from .graph import (
    ConditionViolation,
    DependencyKind,
    SequentialCausalGraph,
    check_condition_1,
    check_condition_2,
    merge_selection_cliques,
)
from .ci import (
    CIProvider,
    CIQuery,
    CITestResult,
    Dataset,
    DegenerateDataError,
    FisherZProvider,
    OracleProvider,
    correlation_matrix,
    fisher_z_test,
    partial_correlation,
)
from .discovery import DiscoveryOptions, DiscoveryState, discover, stage_one, stage_three, stage_two
from .simulate import (
    CsvFormatError,
    GenerationResult,
    SCMParameters,
    SelectionSurvivalError,
    StructureSpec,
    WeightPolicy,
    apply_selection,
    draw_scm_parameters,
    generate,
    random_structure,
    read_dataset_csv,
    sample_selected,
    sample_unselected,
    write_dataset_csv,
)
from .evaluate import (
    KINDS,
    EvalReport,
    KindMetrics,
    ReplicateOutcome,
    SampleSizeSummary,
    ScalabilityPoint,
    classify_pairs,
    compare,
    run_benchmark,
    run_sample_size_study,
    run_scalability,
    selection_pair_scores,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionViolation",
    "DependencyKind",
    "SequentialCausalGraph",
    "check_condition_1",
    "check_condition_2",
    "merge_selection_cliques",
    "CIProvider",
    "CIQuery",
    "CITestResult",
    "Dataset",
    "DegenerateDataError",
    "FisherZProvider",
    "OracleProvider",
    "correlation_matrix",
    "fisher_z_test",
    "partial_correlation",
    "DiscoveryOptions",
    "DiscoveryState",
    "discover",
    "stage_one",
    "stage_two",
    "stage_three",
    "CsvFormatError",
    "GenerationResult",
    "SCMParameters",
    "SelectionSurvivalError",
    "StructureSpec",
    "WeightPolicy",
    "apply_selection",
    "draw_scm_parameters",
    "generate",
    "random_structure",
    "read_dataset_csv",
    "sample_selected",
    "sample_unselected",
    "write_dataset_csv",
    "KINDS",
    "EvalReport",
    "KindMetrics",
    "ReplicateOutcome",
    "SampleSizeSummary",
    "ScalabilityPoint",
    "classify_pairs",
    "compare",
    "run_benchmark",
    "run_sample_size_study",
    "run_scalability",
    "selection_pair_scores",
    "__version__",
]

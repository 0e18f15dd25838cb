"""Hierarchical subspace learning toolkit.

Iterative hypersphere-based stratified sampling, feature selection, and
eigen-based feature extraction (PCA, FDA, GDA, RICA), plus the four
evaluation classifiers and a reproducible benchmark harness.
"""

from .classifiers import (
    KNearestNeighbors,
    LdaClassifier,
    QdaClassifier,
    RandomForest,
    accuracy,
)
from .dataset import (
    Dataset,
    SplitDataset,
    StandardizationParams,
    apply_standardization,
    avg_feature_std,
    load_csv,
    make_rings,
    split_stratified,
    standardize,
    write_csv,
)
from .feature_extraction import (
    KernelData,
    ProjectionModel,
    ScatterPair,
    deserialize_model,
    fisher_ratio,
    fit_fda,
    fit_gda,
    fit_pca,
    fit_rica,
    project,
    rica_loss_and_grad,
    scatter_matrices,
    serialize_model,
)
from .feature_selection import FeatureScores, feature_scores, random_subset, select_top
from .harness import (
    ClassifierSpec,
    DatasetSpec,
    ExperimentGrid,
    ResultRecord,
    emit_table,
    parse_config,
    render_table,
    run_grid,
)
from .hierarchy import (
    PipelineConfig,
    ProjectionHistory,
    apply_history,
    deserialize_history,
    load_history,
    run_hierarchical,
    run_original,
    save_history,
    serialize_history,
)
from .numerics import EigenResult, covariance, generalized_eigen, symmetric_eigen
from .sampling import (
    Hypersphere,
    ScheduleState,
    advance_schedule,
    draw_centers,
    init_schedule,
    points_in_sphere,
    stratified_sample,
)

__version__ = "0.1.0"

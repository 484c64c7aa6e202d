"""tractwise: tract-level table cleaning, correlation analysis, and
regression tree/forest modeling with reproducible evaluation."""

from .dataset import (
    DEFAULT_NULL_TOKENS,
    CleanDataset,
    CleaningReport,
    ColumnSpec,
    RawTable,
    join_and_clean,
    load_table,
    normalize_nulls,
    normalize_tract_key,
    standardize_name,
)
from .errors import (
    ConfigError,
    DegenerateDataError,
    DuplicateKeyError,
    EmptyGroupError,
    EmptyJoinError,
    MissingColumnError,
    NameCollisionError,
    RankDeficiencyError,
    TractwiseError,
    WidthMismatchError,
)
from .evaluation import (
    CvReport,
    DepthSweepReport,
    FoldPlan,
    ModelSpec,
    cross_validate,
    depth_sweep,
    find_overfit_depth,
    kfold_plan,
    train_test_split,
)
from .forest import (
    ForestConfig,
    RandomForest,
    export_forest,
    fit_forest,
    import_forest,
    predict_forest,
    predict_forest_batch,
)
from .linreg import (
    PolyModel,
    ResidualReport,
    fit_poly,
    predict,
    r2_score,
    residual_report,
    residual_spread_ratio,
)
from .stats import (
    CorrelationMatrix,
    GroupComparison,
    categorical_group_summary,
    corr_matrix,
    pearson,
    threshold_groups,
    top_k_correlated,
)
from .tree import (
    RegressionTree,
    SplitRule,
    TreeConfig,
    TreeNode,
    best_split,
    export_tree,
    fit_tree,
    import_tree,
    node_variance,
    predict_tree,
    predict_tree_batch,
    split_loss,
    weighted_split_loss,
)

__version__ = "0.1.0"

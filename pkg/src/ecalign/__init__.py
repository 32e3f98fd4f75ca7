"""Trade-based economic complexity, relatedness and sustainability toolkit."""

from .complexity import ComplexityScores, build_reduced_matrices, compute_eci_pci, complexity_scores
from .econometrics import (
    LogitFit,
    fit_fe_logit,
    marginal_effect_grid,
    mcfadden_r2,
    orthogonalize,
    relatedness_threshold,
    roc_auc,
    vif,
)
from .entry import build_entry_panel, detect_entries
from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    EcalignError,
    LoadError,
    StageDependencyError,
)
from .ingest import (
    SampleFilterConfig,
    TradePanel,
    apply_sample_filters,
    load_income_groups,
    load_indicators,
    load_product_categories,
    load_trade_flows,
)
from .opportunities import (
    AlignmentSlope,
    OpportunitySet,
    alignment_slope,
    anova_decomposition,
    build_opportunity_set,
    wilcoxon_rank_sum,
)
from .relatedness import RelatednessBundle, compute_density, compute_proximity, compute_relatedness
from .specialization import SpecializationMatrix, binarize, compute_rca
from .sustainability import ScoreVector, product_score, zscore_country_indicator

__version__ = "0.1.0"

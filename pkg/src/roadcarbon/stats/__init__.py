"""Statistical battery for probing linearity in a corpus of road designs."""

from .analysis import AnalysisPlan, Dataset, corpus_analysis, render_text, report_to_json
from .distributions import betainc, f_upper_p, t_two_sided_p
from .methods import (
    LinearityReport,
    ModelFit,
    OLSResult,
    PairwiseComparison,
    PCAResult,
    PearsonResult,
    TestReport,
    anova_bonferroni,
    bonferroni,
    linearity_report,
    ols_vif,
    pca,
    pearson,
    t_test_independent,
    t_test_paired,
)

__all__ = [
    "AnalysisPlan",
    "Dataset",
    "corpus_analysis",
    "render_text",
    "report_to_json",
    "betainc",
    "f_upper_p",
    "t_two_sided_p",
    "LinearityReport",
    "ModelFit",
    "OLSResult",
    "PairwiseComparison",
    "PCAResult",
    "PearsonResult",
    "TestReport",
    "anova_bonferroni",
    "bonferroni",
    "linearity_report",
    "ols_vif",
    "pca",
    "pearson",
    "t_test_independent",
    "t_test_paired",
]

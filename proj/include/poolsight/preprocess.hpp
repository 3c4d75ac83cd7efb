#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "poolsight/layers.hpp"
#include "poolsight/matrix.hpp"

namespace poolsight {

/// Data-hygiene stages applied between feature extraction and the Lasso:
/// attribute-level missing-value rules, uninformative/collinear feature
/// removal, the VIF elimination loop, response transforms, and influential
/// point filtering.

// ---------------------------------------------------------------------------
// Missing-value rules

/// Fill a missing target from an arithmetic formula over same-record
/// attributes (e.g. average household size from population / households).
struct DerivedImputation {
    std::string layer;
    std::string target;
    std::string formula;  // +,-,*,/, parentheses, attribute names, literals
};

enum class GuardOp { Equal, LessEqual, Missing };

/// When the guard holds for a record, fill the missing values of the target
/// attributes with `fill`. Non-missing cells are never modified.
struct ZeroRule {
    std::string name;
    std::string layer;
    std::string guard;  // expression; a single attribute name for Missing
    GuardOp op = GuardOp::Equal;
    double value = 0.0;
    std::vector<std::string> targets;
    double fill = 0.0;
};

struct RuleSet {
    std::vector<DerivedImputation> derived;
    std::vector<ZeroRule> zero_rules;

    /// Rejects two rules filling the same (layer, target) with different values.
    void validate() const;
};

RuleSet load_ruleset(const std::string& path);
void save_ruleset(const RuleSet& rules, const std::string& path);

struct RuleApplication {
    std::string rule;
    int cells_filled = 0;
};

/// Derived imputations first, then zero rules, in declaration order.
/// Untouched cells are preserved bit-exact.
std::vector<RuleApplication> apply_missing_rules(std::map<std::string, SpatialLayer>& layers,
                                                 const RuleSet& rules);

/// Evaluate a rule formula for every record of a layer (missing when any
/// operand is missing or the arithmetic is invalid). Exposed for tests.
std::vector<std::optional<double>> evaluate_formula(const SpatialLayer& layer,
                                                    const std::string& formula);

// ---------------------------------------------------------------------------
// Feature pruning

struct CorrelationGroup {
    std::string representative;
    std::vector<std::string> removed;
};

struct VifStep {
    std::string name;
    double vif = 0.0;  // +inf encoded as infinity()
};

struct EigenDiagnostics {
    double min_eigenvalue = 0.0;
    double eigenvalue_sum = 0.0;
    int p = 0;
};

struct PruneReport {
    std::vector<std::string> dropped_uninformative;
    std::vector<CorrelationGroup> correlation_groups;
    std::vector<VifStep> vif_elimination_order;
    EigenDiagnostics eigen_diagnostics;
};

void save_prune_report(const PruneReport& report, const std::string& path);

/// Remove features with strictly more than zero_frac zero values.
std::pair<FeatureMatrix, std::vector<std::string>> drop_uninformative(const FeatureMatrix& X,
                                                                      double zero_frac = 0.95);

/// Greedy grouping of features whose pairwise |Pearson r| exceeds the
/// threshold; one representative survives per group. Feature order follows
/// `priority` (names listed first win), then column index. Constant columns
/// are recorded as uninformative and removed beforehand.
std::pair<FeatureMatrix, PruneReport> prune_correlated(
    const FeatureMatrix& X, double threshold = 0.95,
    const std::vector<std::string>& priority = {});

/// Iteratively remove the max-VIF feature until max VIF < threshold.
/// VIF_j = 1/(1 - R^2_j) from regressing feature j (with intercept) on the
/// rest, computed via the inverse correlation matrix. Rank-deficient
/// auxiliary regressions yield VIF = +inf and are removed first, lowest
/// column index breaking ties. Appends steps and the final eigenvalue
/// diagnostics to the report.
std::pair<FeatureMatrix, PruneReport> vif_eliminate(const FeatureMatrix& X,
                                                    double threshold = 10.0);

// ---------------------------------------------------------------------------
// Response transforms

enum class TransformKind { Identity, Sqrt, Square, Log, BoxCox };

TransformKind transform_kind_from_string(const std::string& s);
std::string to_string(TransformKind k);

struct ResponseTransform {
    TransformKind kind = TransformKind::Identity;
    double lambda = 0.0;  // Box-Cox exponent

    /// Element-wise transform; Sqrt/Log/BoxCox require positive input.
    Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
    Eigen::VectorXd invert(const Eigen::VectorXd& y) const;
};

/// Fitted-value / residual pairs from an OLS fit of the (transformed)
/// response, the data behind a residual diagnostic plot.
std::vector<std::pair<double, double>> residual_plot_data(const Eigen::MatrixXd& X,
                                                          const Eigen::VectorXd& y);

/// Diagnostic for the nonlinear-feature question: k-fold CV MSE of OLS on X
/// versus X extended with sqrt(x), x^2 and log(x+1) of each non-binary
/// column. The default pipeline never applies the expansion.
struct ExpansionReport {
    double cv_mse_base = 0.0;
    double cv_mse_expanded = 0.0;
    int p_base = 0;
    int p_expanded = 0;
};

ExpansionReport nonlinear_expansion_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          int k, uint64_t seed);

// ---------------------------------------------------------------------------
// Influential observations

struct CooksResult {
    std::vector<int> removed_rows;
    Eigen::VectorXd distances;
};

/// Cook's distance D_i = r_i^2 h_ii / (p s^2 (1-h_ii)^2) with p counting the
/// intercept; rows above the threshold are flagged for removal. Leverage 1
/// gives D = +inf.
CooksResult cooks_filter(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double threshold = 0.015);

}  // namespace poolsight

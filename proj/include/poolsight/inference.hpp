#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolsight/matrix.hpp"
#include "poolsight/regression.hpp"

namespace poolsight {

/// Bootstrap stability analysis of CV-Lasso coefficients.
///
/// Replicate b resamples the n rows with replacement using
/// Rng(derive_seed(seed, b)), runs cv_select on the resample with fold seed
/// derive_seed(derive_seed(seed, b), 1), and records the standardized
/// coefficient beta_j * sd(x_j over the resampled rows). Streams are keyed by
/// replicate index, so results do not depend on scheduling or worker count.

struct FeatureStability {
    std::string name;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;   // Tukey: extreme sample within 1.5 IQR of the box
    double whisker_high = 0.0;
    double zero_fraction = 0.0;
    double flip_fraction = 0.0;  // share with the sign opposite to the median's
    bool significant = false;
};

struct BootstrapOptions {
    int B = 10000;
    int k = 10;
    std::vector<double> lambda_grid;  // empty -> default_lambda_grid()
    uint64_t seed = 0;
    int threads = 1;                  // any value yields identical output
    bool full_sample_sd = false;      // sensitivity flag: standardize by the
                                      // full-sample sd instead of the replicate's
    double significance_zero_fraction = 0.05;
    double flip_tolerance = 0.01;     // quantifies "negligible" opposite signs
    LassoOptions lasso;
};

struct BootstrapReport {
    std::vector<FeatureStability> features;
    int B = 0;
    int k = 0;
    uint64_t seed = 0;
    std::vector<double> lambda_grid;
    int n_failed_replicates = 0;
    std::vector<std::string> failure_messages;   // first few, for diagnostics
    Eigen::MatrixXd standardized_samples;        // valid replicates x p
};

BootstrapReport bootstrap_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const std::vector<std::string>& feature_names,
                                const BootstrapOptions& options);

/// Rows with zero_fraction below the display threshold, sorted by descending
/// median standardized coefficient: the data behind the box-plot /
/// stacked-bar stability figure.
std::vector<FeatureStability> stability_report(const BootstrapReport& report,
                                               double display_threshold = 0.10);

/// Independent bootstraps per stratum; stratum seeds derive from the master
/// seed and the stratum label. Every stratum needs at least 10*k rows.
std::map<std::string, BootstrapReport> stratified_run(const Eigen::MatrixXd& X,
                                                      const Eigen::VectorXd& y,
                                                      const std::vector<std::string>& feature_names,
                                                      const std::vector<std::string>& strata,
                                                      const BootstrapOptions& options);

void save_bootstrap_report(const BootstrapReport& report, const std::string& json_path);

/// Reads back a saved report (summaries only; raw samples live in the
/// optional binary file).
BootstrapReport load_bootstrap_report(const std::string& json_path);
void save_stability_csv(const std::vector<FeatureStability>& rows, const std::string& csv_path);

/// Raw standardized-coefficient samples as a binary columnar file
/// (magic, rows, cols, row-major doubles) for reanalysis.
void save_samples_binary(const Eigen::MatrixXd& samples, const std::string& path);
Eigen::MatrixXd load_samples_binary(const std::string& path);

}  // namespace poolsight

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolsight/errors.hpp"

namespace poolsight {

/// OLS and coordinate-descent Lasso / Elastic Net.
///
/// Lasso solves
///   min (1/2n) sum_i (y_i - b0 - x_i'b)^2 + lambda * sum_j |b~_j|
///       + lambda2 * sum_j b~_j^2
/// where b~ are the coefficients of the internally standardized features
/// (zero mean, unit population variance); the intercept is unpenalized and
/// coefficients are reported back on the original feature scale. The
/// `objective` field restates the penalized objective at the returned
/// original-scale coefficients.

struct OlsFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
    double r2 = 0.0;
    double mse = 0.0;  // RSS / n
    Eigen::VectorXd residuals;
    Eigen::VectorXd leverages;  // diagonal of the hat matrix
};

/// Requires n > p and a full-column-rank design (intercept added internally).
/// A rank-deficient design raises NumericError naming dependent columns.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct LassoFit {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;  // original feature scale
    double lambda = 0.0;
    double lambda2 = 0.0;
    double objective = 0.0;
    int n_iterations = 0;  // coordinate-descent sweeps
};

struct LassoOptions {
    double tol = 1e-7;       // max standardized-coefficient change per sweep
    int max_sweeps = 100000;
};

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   double lambda2 = 0.0, const LassoOptions& options = {});

/// Raised when coordinate descent hits the sweep cap; carries the last iterate.
struct LassoConvergenceError : NumericError {
    LassoConvergenceError(const std::string& what, LassoFit last_iterate, double last_delta)
        : NumericError(what), last(std::move(last_iterate)), max_delta(last_delta) {}
    LassoFit last;
    double max_delta = 0.0;
};

/// Smallest lambda with an all-zero solution: max_j |<x~_j, y - ybar>| / n.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Subgradient optimality residual of a fit, in the standardized metric:
/// zero coefficients must have |(1/n)<x~_j, r>| <= lambda, nonzero ones
/// (1/n)<x~_j, r> = lambda*sign + 2*lambda2*b~_j. Returns the max violation.
double lasso_kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const LassoFit& fit);

/// The 201-point grid 10^i, i = -4(0.02)0.
std::vector<double> default_lambda_grid();

struct CVResult {
    std::vector<double> lambda_grid;
    std::vector<double> mean_mse;  // test MSE averaged over folds
    std::vector<double> std_mse;   // sample std over folds
    std::vector<int> nnz;          // nonzeros of the full-data path fit
    double lambda_cv = 0.0;
    int lambda_cv_index = -1;
    LassoFit fit_cv;               // full-data fit at lambda_cv
    std::vector<std::string> warnings;
};

/// Seed-determined random partition into k near-equal folds; ties in the MSE
/// argmin go to the largest lambda (sparsest model). Bit-reproducible for a
/// fixed seed.
CVResult cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const std::vector<double>& grid, int k, uint64_t seed,
                   const LassoOptions& options = {});

/// lambda, mean MSE, std MSE, nnz as CSV.
void save_cv_curve(const CVResult& cv, const std::string& path);

}  // namespace poolsight

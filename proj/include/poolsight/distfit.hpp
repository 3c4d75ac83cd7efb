#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolsight/errors.hpp"

namespace poolsight {

/// Fitting the consumption distribution: a standard family (Weibull, beta,
/// gamma) on a monotone transform of the data, with KS goodness of fit.
///
/// For the beta family the transformed data is rescaled to [0,1] using the
/// observed transformed-space minimum and maximum (no slack); those bounds
/// are stored in z_min/z_max, with the raw-data bounds kept alongside for
/// reference since the two spaces are easy to confuse.

enum class DistFamily { Weibull, Beta, Gamma };
enum class DistTransform { Identity, Square, Cube, Sqrt, Cbrt, Log };
enum class FitMethod { Moments, MaxLikelihood };

DistFamily family_from_string(const std::string& s);
DistTransform dist_transform_from_string(const std::string& s);
std::string to_string(DistFamily f);
std::string to_string(DistTransform t);
std::string to_string(FitMethod m);

double apply_dist_transform(DistTransform t, double y);

struct DistributionFit {
    DistFamily family = DistFamily::Beta;
    DistTransform transform = DistTransform::Identity;
    FitMethod method = FitMethod::Moments;
    std::vector<double> params;  // beta: {alpha, beta}; weibull/gamma: {shape, scale}
    double z_min = 0.0;          // transformed-space sample bounds
    double z_max = 0.0;
    double y_min = 0.0;          // raw-space sample bounds, for reporting
    double y_max = 0.0;
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;

    /// CDF / PDF of the raw variable Y (change of variables through the
    /// transform; beta additionally through the [0,1] rescaling).
    double cdf(double y) const;
    double pdf(double y) const;

    /// Bisection inversion of the CDF to absolute tolerance 1e-10.
    double quantile(double u) const;
};

/// Method-of-moments for all families, maximum likelihood for Weibull
/// (shape via safeguarded Newton, at most 200 iterations, tolerance 1e-10).
/// Requires n >= 10 and positive variance; the KS fields are filled in.
DistributionFit fit_distribution(std::span<const double> y, DistFamily family,
                                 DistTransform transform, FitMethod method);

/// Density of energy whose cube root is beta-distributed after rescaling:
///   f(y) = z^(a-1) (1-z)^(b-1) / (B(a,b) * 3 * (y_max-y_min) * y^(2/3)),
///   z = (cbrt(y) - y_min) / (y_max - y_min).
/// The chain rule forces the factor 3. Bounds are cube-root-space endpoints,
/// so the support in energy units is [y_min^3, y_max^3]; outside it the
/// density is zero by definition. z is clamped to [1e-12, 1-1e-12] so
/// endpoint evaluations stay finite when a or b is below 1.
double transformed_beta_pdf(double y, double alpha, double beta, double y_min, double y_max);

/// Two-sided KS statistic by the order-statistics formula and the asymptotic
/// Kolmogorov p-value at t = sqrt(n) * D.
std::pair<double, double> ks_test(std::span<const double> y, const DistributionFit& fit);

/// 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2), truncated when terms drop
/// below 1e-12.
double kolmogorov_p(double t);

struct PpQqData {
    std::vector<double> pp_empirical;  // i/(n+1)
    std::vector<double> pp_fitted;     // CDF at the i-th order statistic
    std::vector<double> qq_sample;     // order statistics
    std::vector<double> qq_fitted;     // fitted quantiles at i/(n+1)
};

PpQqData pp_qq_data(std::span<const double> y, const DistributionFit& fit);

struct ScanCell {
    DistFamily family = DistFamily::Beta;
    DistTransform transform = DistTransform::Identity;
    std::optional<DistributionFit> fit;
    std::string error;  // set when the cell is infeasible
};

/// The full 3x6 family-by-transform grid; method per the selection rule
/// (moments for beta and gamma, maximum likelihood for Weibull).
std::vector<ScanCell> model_scan(std::span<const double> y);

void save_scan_csv(const std::vector<ScanCell>& cells, const std::string& path);
void save_fit_json(const DistributionFit& fit, const std::string& path);
void save_pp_qq_csv(const PpQqData& data, const std::string& path);

}  // namespace poolsight

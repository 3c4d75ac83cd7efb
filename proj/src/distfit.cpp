#include "poolsight/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "poolsight/csv.hpp"

namespace poolsight {

namespace {

constexpr double kEndpointEps = 1e-12;

double beta_reg(double a, double b, double x) {
    return boost::math::ibeta(a, b, std::clamp(x, 0.0, 1.0));
}

double gamma_reg(double shape, double x) {
    return x <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x);
}

double log_beta_fn(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

DistFamily family_from_string(const std::string& s) {
    if (s == "weibull") return DistFamily::Weibull;
    if (s == "beta") return DistFamily::Beta;
    if (s == "gamma") return DistFamily::Gamma;
    throw ConfigError("unknown distribution family '" + s + "'");
}

DistTransform dist_transform_from_string(const std::string& s) {
    if (s == "identity") return DistTransform::Identity;
    if (s == "square") return DistTransform::Square;
    if (s == "cube") return DistTransform::Cube;
    if (s == "sqrt") return DistTransform::Sqrt;
    if (s == "cbrt") return DistTransform::Cbrt;
    if (s == "log") return DistTransform::Log;
    throw ConfigError("unknown distribution transform '" + s + "'");
}

std::string to_string(DistFamily f) {
    switch (f) {
    case DistFamily::Weibull: return "weibull";
    case DistFamily::Beta: return "beta";
    case DistFamily::Gamma: return "gamma";
    }
    return "?";
}

std::string to_string(DistTransform t) {
    switch (t) {
    case DistTransform::Identity: return "identity";
    case DistTransform::Square: return "square";
    case DistTransform::Cube: return "cube";
    case DistTransform::Sqrt: return "sqrt";
    case DistTransform::Cbrt: return "cbrt";
    case DistTransform::Log: return "log";
    }
    return "?";
}

std::string to_string(FitMethod m) {
    return m == FitMethod::Moments ? "moments" : "mle";
}

double apply_dist_transform(DistTransform t, double y) {
    switch (t) {
    case DistTransform::Identity: return y;
    case DistTransform::Square: return y * y;
    case DistTransform::Cube: return y * y * y;
    case DistTransform::Sqrt: return std::sqrt(y);
    case DistTransform::Cbrt: return std::cbrt(y);
    case DistTransform::Log: return std::log(y);
    }
    return y;
}

namespace {

// CDF/PDF of the fitted family on the transformed variable z.
double family_cdf(const DistributionFit& f, double z) {
    switch (f.family) {
    case DistFamily::Weibull: {
        const double k = f.params[0], lam = f.params[1];
        return z <= 0.0 ? 0.0 : 1.0 - std::exp(-std::pow(z / lam, k));
    }
    case DistFamily::Gamma:
        return gamma_reg(f.params[0], z / f.params[1]);
    case DistFamily::Beta: {
        const double span = f.z_max - f.z_min;
        return beta_reg(f.params[0], f.params[1], (z - f.z_min) / span);
    }
    }
    return 0.0;
}

double family_pdf(const DistributionFit& f, double z) {
    switch (f.family) {
    case DistFamily::Weibull: {
        const double k = f.params[0], lam = f.params[1];
        if (z <= 0.0) return 0.0;
        const double r = z / lam;
        return k / lam * std::pow(r, k - 1.0) * std::exp(-std::pow(r, k));
    }
    case DistFamily::Gamma: {
        const double k = f.params[0], th = f.params[1];
        if (z <= 0.0) return 0.0;
        return std::exp((k - 1.0) * std::log(z) - z / th - std::lgamma(k) - k * std::log(th));
    }
    case DistFamily::Beta: {
        const double a = f.params[0], b = f.params[1];
        const double span = f.z_max - f.z_min;
        double u = (z - f.z_min) / span;
        if (u < 0.0 || u > 1.0) return 0.0;
        u = std::clamp(u, kEndpointEps, 1.0 - kEndpointEps);
        return std::exp((a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_beta_fn(a, b)) /
               span;
    }
    }
    return 0.0;
}

double transform_derivative(DistTransform t, double y) {
    switch (t) {
    case DistTransform::Identity: return 1.0;
    case DistTransform::Square: return 2.0 * y;
    case DistTransform::Cube: return 3.0 * y * y;
    case DistTransform::Sqrt: return 0.5 / std::sqrt(y);
    case DistTransform::Cbrt: return 1.0 / (3.0 * std::cbrt(y) * std::cbrt(y));
    case DistTransform::Log: return 1.0 / y;
    }
    return 1.0;
}

}  // namespace

double DistributionFit::cdf(double y) const {
    return family_cdf(*this, apply_dist_transform(transform, y));
}

double DistributionFit::pdf(double y) const {
    const double z = apply_dist_transform(transform, y);
    return family_pdf(*this, z) * transform_derivative(transform, y);
}

double DistributionFit::quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DataError("quantile level outside [0,1]");
    // Bracket the quantile, expanding from the sample range, then bisect.
    double lo = y_min, hi = y_max;
    for (int i = 0; i < 200 && cdf(lo) > u && lo > 1e-300; ++i) lo *= 0.5;
    for (int i = 0; i < 200 && cdf(hi) < u; ++i) hi = hi <= 0.0 ? 1.0 : hi * 2.0;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

DistributionFit fit_distribution(std::span<const double> y, DistFamily family,
                                 DistTransform transform, FitMethod method) {
    const size_t n = y.size();
    if (n < 10) throw DataError("fit_distribution: need at least 10 observations");

    const bool needs_positive = transform == DistTransform::Log ||
                                transform == DistTransform::Sqrt ||
                                transform == DistTransform::Cbrt;
    std::vector<double> z(n);
    for (size_t i = 0; i < n; ++i) {
        if (needs_positive && !(y[i] > 0.0)) {
            throw DataError("fit_distribution: transform '" + to_string(transform) +
                            "' requires positive data");
        }
        z[i] = apply_dist_transform(transform, y[i]);
        if (!std::isfinite(z[i])) throw DataError("fit_distribution: non-finite transformed value");
    }

    DistributionFit fit;
    fit.family = family;
    fit.transform = transform;
    fit.method = method;
    fit.y_min = *std::min_element(y.begin(), y.end());
    fit.y_max = *std::max_element(y.begin(), y.end());
    fit.z_min = *std::min_element(z.begin(), z.end());
    fit.z_max = *std::max_element(z.begin(), z.end());

    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (var <= 0.0) throw NumericError("fit_distribution: degenerate data (zero variance)");

    switch (family) {
    case DistFamily::Beta: {
        if (method != FitMethod::Moments) {
            throw ConfigError("fit_distribution: only method-of-moments is available for beta");
        }
        const double span = fit.z_max - fit.z_min;
        const double m = (mean - fit.z_min) / span;
        const double v = var / (span * span);
        const double common = m * (1.0 - m) / v - 1.0;
        if (!(common > 0.0)) {
            throw NumericError("fit_distribution: beta moments infeasible (variance too large)");
        }
        fit.params = {m * common, (1.0 - m) * common};
        break;
    }
    case DistFamily::Gamma: {
        if (method != FitMethod::Moments) {
            throw ConfigError("fit_distribution: only method-of-moments is available for gamma");
        }
        if (!(fit.z_min > 0.0)) {
            throw DataError("fit_distribution: gamma requires positive transformed data");
        }
        fit.params = {mean * mean / var, var / mean};
        break;
    }
    case DistFamily::Weibull: {
        if (!(fit.z_min > 0.0)) {
            throw DataError("fit_distribution: weibull requires positive transformed data");
        }
        if (method == FitMethod::Moments) {
            // Solve Gamma(1+2/k)/Gamma(1+1/k)^2 = 1 + var/mean^2 by bisection.
            const double target = 1.0 + var / (mean * mean);
            auto ratio = [](double k) {
                return std::exp(std::lgamma(1.0 + 2.0 / k) - 2.0 * std::lgamma(1.0 + 1.0 / k));
            };
            double lo = 0.02, hi = 200.0;
            if (ratio(lo) < target || ratio(hi) > target) {
                throw NumericError("fit_distribution: weibull moments out of range");
            }
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (ratio(mid) > target ? lo : hi) = mid;
            }
            const double k = 0.5 * (lo + hi);
            fit.params = {k, mean / std::exp(std::lgamma(1.0 + 1.0 / k))};
        } else {
            // Profile likelihood: g(k) = S1(k)/S0(k) - 1/k - mean(log z) = 0,
            // with S_j = sum z^k log(z)^j, computed against z_max for stability.
            const double log_zmax = std::log(fit.z_max);
            std::vector<double> logz(n);
            double mean_log = 0.0;
            for (size_t i = 0; i < n; ++i) {
                logz[i] = std::log(z[i]);
                mean_log += logz[i];
            }
            mean_log /= static_cast<double>(n);

            auto eval = [&](double k, double& g, double& dg) {
                double s0 = 0.0, s1 = 0.0, s2 = 0.0;
                for (size_t i = 0; i < n; ++i) {
                    const double w = std::exp(k * (logz[i] - log_zmax));
                    s0 += w;
                    s1 += w * logz[i];
                    s2 += w * logz[i] * logz[i];
                }
                const double r1 = s1 / s0;
                g = r1 - 1.0 / k - mean_log;
                dg = (s2 / s0 - r1 * r1) + 1.0 / (k * k);
            };

            double sd_log = 0.0;
            for (size_t i = 0; i < n; ++i) sd_log += (logz[i] - mean_log) * (logz[i] - mean_log);
            sd_log = std::sqrt(sd_log / static_cast<double>(n));
            double k = 1.2 / std::max(sd_log, 1e-8);  // standard starting guess

            double lo = 1e-3, hi = 1e3;
            double g = 0.0, dg = 0.0;
            bool converged = false;
            int it = 0;
            for (; it < 200; ++it) {
                eval(k, g, dg);
                if (std::abs(g) < 1e-12) {
                    converged = true;
                    break;
                }
                if (g > 0.0) hi = std::min(hi, k);
                else lo = std::max(lo, k);
                double next = k - g / dg;  // g is increasing in k
                if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
                if (std::abs(next - k) < 1e-10 * std::max(1.0, k)) {
                    k = next;
                    converged = true;
                    break;
                }
                k = next;
            }
            if (!converged) {
                throw NumericError("fit_distribution: weibull MLE did not converge after " +
                                   std::to_string(it) + " iterations (last k=" +
                                   std::to_string(k) + ", g=" + std::to_string(g) + ")");
            }
            double s0 = 0.0;
            for (size_t i = 0; i < n; ++i) s0 += std::exp(k * (std::log(z[i]) - log_zmax));
            fit.params = {k, fit.z_max * std::pow(s0 / static_cast<double>(n), 1.0 / k)};
        }
        break;
    }
    }

    for (double p : fit.params) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw NumericError("fit_distribution: parameter outside the family domain");
        }
    }

    const auto [d, pval] = ks_test(y, fit);
    fit.ks_statistic = d;
    fit.ks_p_value = pval;
    return fit;
}

double transformed_beta_pdf(double y, double alpha, double beta, double y_min, double y_max) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(y_max > y_min)) {
        throw ConfigError("transformed_beta_pdf: invalid parameters");
    }
    if (!(y > 0.0)) return 0.0;
    const double span = y_max - y_min;
    const double cbrt_y = std::cbrt(y);
    double zv = (cbrt_y - y_min) / span;
    if (zv < 0.0 || zv > 1.0) return 0.0;  // outside the support
    zv = std::clamp(zv, kEndpointEps, 1.0 - kEndpointEps);
    return std::exp((alpha - 1.0) * std::log(zv) + (beta - 1.0) * std::log1p(-zv) -
                    log_beta_fn(alpha, beta)) /
           (3.0 * span * cbrt_y * cbrt_y);
}

std::pair<double, double> ks_test(std::span<const double> y, const DistributionFit& fit) {
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    if (n == 0) throw DataError("ks_test: empty sample");
    const double dn = static_cast<double>(n);
    double d = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double f = fit.cdf(sorted[i]);
        d = std::max(d, static_cast<double>(i + 1) / dn - f);
        d = std::max(d, f - static_cast<double>(i) / dn);
    }
    return {d, kolmogorov_p(std::sqrt(dn) * d)};
}

double kolmogorov_p(double t) {
    if (t <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100000; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * t * t);
        if (term < 1e-12) break;
        sum += sign * term;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

PpQqData pp_qq_data(std::span<const double> y, const DistributionFit& fit) {
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    PpQqData out;
    out.pp_empirical.reserve(n);
    out.pp_fitted.reserve(n);
    out.qq_sample.reserve(n);
    out.qq_fitted.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        out.pp_empirical.push_back(u);
        out.pp_fitted.push_back(fit.cdf(sorted[i]));
        out.qq_sample.push_back(sorted[i]);
        out.qq_fitted.push_back(fit.quantile(u));
    }
    return out;
}

std::vector<ScanCell> model_scan(std::span<const double> y) {
    std::vector<ScanCell> cells;
    const DistFamily families[] = {DistFamily::Weibull, DistFamily::Beta, DistFamily::Gamma};
    const DistTransform transforms[] = {DistTransform::Identity, DistTransform::Square,
                                        DistTransform::Cube,     DistTransform::Sqrt,
                                        DistTransform::Cbrt,     DistTransform::Log};
    for (DistTransform t : transforms) {
        for (DistFamily f : families) {
            ScanCell cell;
            cell.family = f;
            cell.transform = t;
            const FitMethod method =
                f == DistFamily::Weibull ? FitMethod::MaxLikelihood : FitMethod::Moments;
            try {
                cell.fit = fit_distribution(y, f, t, method);
            } catch (const Error& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void save_scan_csv(const std::vector<ScanCell>& cells, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write scan table: " + path);
    out << "family,transform,method,param1,param2,ks_statistic,ks_p_value,error\n";
    for (const auto& c : cells) {
        out << to_string(c.family) << "," << to_string(c.transform) << ",";
        if (c.fit) {
            out << to_string(c.fit->method) << "," << csv::format_double(c.fit->params[0]) << ","
                << csv::format_double(c.fit->params[1]) << ","
                << csv::format_double(c.fit->ks_statistic) << ","
                << csv::format_double(c.fit->ks_p_value) << ",";
        } else {
            out << ",,,,,";
        }
        out << csv::quote(c.error) << "\n";
    }
}

void save_fit_json(const DistributionFit& fit, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fit record: " + path);
    out << "{\n"
        << " \"family\": \"" << to_string(fit.family) << "\",\n"
        << " \"transform\": \"" << to_string(fit.transform) << "\",\n"
        << " \"method\": \"" << to_string(fit.method) << "\",\n"
        << " \"params\": [" << csv::format_double(fit.params[0]) << ", "
        << csv::format_double(fit.params[1]) << "],\n"
        << " \"z_min\": " << csv::format_double(fit.z_min) << ",\n"
        << " \"z_max\": " << csv::format_double(fit.z_max) << ",\n"
        << " \"y_min\": " << csv::format_double(fit.y_min) << ",\n"
        << " \"y_max\": " << csv::format_double(fit.y_max) << ",\n"
        << " \"ks_statistic\": " << csv::format_double(fit.ks_statistic) << ",\n"
        << " \"ks_p_value\": " << csv::format_double(fit.ks_p_value) << "\n"
        << "}\n";
}

void save_pp_qq_csv(const PpQqData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write P-P/Q-Q data: " + path);
    out << "pp_empirical,pp_fitted,qq_sample,qq_fitted\n";
    for (size_t i = 0; i < data.pp_empirical.size(); ++i) {
        out << csv::format_double(data.pp_empirical[i]) << ","
            << csv::format_double(data.pp_fitted[i]) << "," << csv::format_double(data.qq_sample[i])
            << "," << csv::format_double(data.qq_fitted[i]) << "\n";
    }
}

}  // namespace poolsight

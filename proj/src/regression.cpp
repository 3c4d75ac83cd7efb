#include "poolsight/regression.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "poolsight/csv.hpp"
#include "poolsight/rng.hpp"

namespace poolsight {

using Eigen::MatrixXd;
using Eigen::VectorXd;

OlsFit ols_fit(const MatrixXd& X, const VectorXd& y) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n != y.size()) throw DataError("ols_fit: X and y length mismatch");
    if (n <= p) throw NumericError("ols_fit: requires n > p");

    MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = X;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    if (qr.rank() < p + 1) {
        const auto& perm = qr.colsPermutation().indices();
        std::string cols;
        for (Eigen::Index k = qr.rank(); k < p + 1; ++k) {
            if (!cols.empty()) cols += ", ";
            cols += std::to_string(perm(k) - 1);  // design col 0 is the intercept
        }
        throw NumericError("ols_fit: singular design; dependent columns: " + cols);
    }
    const VectorXd beta = qr.solve(y);

    OlsFit fit;
    fit.intercept = beta(0);
    fit.coefficients = beta.tail(p);
    fit.residuals = y - design * beta;
    const double rss = fit.residuals.squaredNorm();
    fit.mse = rss / static_cast<double>(n);
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    fit.r2 = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);

    Eigen::HouseholderQR<MatrixXd> hqr(design);
    const MatrixXd thin_q = hqr.householderQ() * MatrixXd::Identity(n, p + 1);
    fit.leverages.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) fit.leverages(i) = thin_q.row(i).squaredNorm();
    return fit;
}

namespace {

// Raw sums over a row subset, enough to reconstruct standardized moments.
struct Moments {
    double n = 0.0;
    VectorXd sx;    // sum x_j
    MatrixXd sxx;   // sum x_j x_l
    VectorXd sxy;   // sum x_j y
    double sy = 0.0;
    double syy = 0.0;

    explicit Moments(Eigen::Index p)
        : sx(VectorXd::Zero(p)), sxx(MatrixXd::Zero(p, p)), sxy(VectorXd::Zero(p)) {}
};

Moments full_moments(const MatrixXd& X, const VectorXd& y) {
    Moments m(X.cols());
    m.n = static_cast<double>(X.rows());
    m.sx = X.colwise().sum();
    m.sxx.noalias() = X.transpose() * X;
    m.sxy.noalias() = X.transpose() * y;
    m.sy = y.sum();
    m.syy = y.squaredNorm();
    return m;
}

Moments subset_moments(const MatrixXd& X, const VectorXd& y, const std::vector<int>& rows) {
    Moments m(X.cols());
    m.n = static_cast<double>(rows.size());
    for (int r : rows) {
        const auto x = X.row(r);
        m.sx += x.transpose();
        m.sxx.noalias() += x.transpose() * x;
        m.sxy += x.transpose() * y(r);
        m.sy += y(r);
        m.syy += y(r) * y(r);
    }
    return m;
}

Moments difference(const Moments& a, const Moments& b) {
    Moments m(a.sx.size());
    m.n = a.n - b.n;
    m.sx = a.sx - b.sx;
    m.sxx = a.sxx - b.sxx;
    m.sxy = a.sxy - b.sxy;
    m.sy = a.sy - b.sy;
    m.syy = a.syy - b.syy;
    return m;
}

// Standardized training problem: features scaled to zero mean and unit
// population variance, response centered and scaled by its own sd so the
// convergence tolerance is scale-free.
struct StandardizedProblem {
    Eigen::Index p = 0;
    double y_mean = 0.0;
    double y_sd = 0.0;
    VectorXd mean, sd;
    MatrixXd corr;             // (1/n) X~'X~
    VectorXd xy;               // (1/n) <x~_j, y~>
    std::vector<bool> valid;   // constant columns are excluded from descent

    static StandardizedProblem build(const Moments& m) {
        StandardizedProblem s;
        s.p = m.sx.size();
        const double n = m.n;
        s.mean = m.sx / n;
        s.y_mean = m.sy / n;
        const double y_var = std::max(m.syy / n - s.y_mean * s.y_mean, 0.0);
        s.y_sd = std::sqrt(y_var);
        s.sd.resize(s.p);
        s.valid.assign(static_cast<size_t>(s.p), false);
        for (Eigen::Index j = 0; j < s.p; ++j) {
            const double var = std::max(m.sxx(j, j) / n - s.mean(j) * s.mean(j), 0.0);
            s.sd(j) = std::sqrt(var);
            s.valid[static_cast<size_t>(j)] = s.sd(j) > 0.0;
        }
        s.corr.resize(s.p, s.p);
        s.xy.resize(s.p);
        for (Eigen::Index j = 0; j < s.p; ++j) {
            if (!s.valid[static_cast<size_t>(j)]) {
                s.corr.row(j).setZero();
                s.corr.col(j).setZero();
                s.xy(j) = 0.0;
                continue;
            }
            for (Eigen::Index l = 0; l <= j; ++l) {
                if (!s.valid[static_cast<size_t>(l)]) continue;
                const double cov = m.sxx(j, l) / n - s.mean(j) * s.mean(l);
                const double c = cov / (s.sd(j) * s.sd(l));
                s.corr(j, l) = c;
                s.corr(l, j) = c;
            }
            const double cov_y = m.sxy(j) / n - s.mean(j) * s.y_mean;
            s.xy(j) = s.y_sd > 0.0 ? cov_y / (s.sd(j) * s.y_sd) : 0.0;
        }
        return s;
    }

    // Back-transform normalized standardized coefficients to original scale.
    void to_original(const VectorXd& b, double& intercept, VectorXd& beta) const {
        beta = VectorXd::Zero(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            if (valid[static_cast<size_t>(j)] && b(j) != 0.0) {
                beta(j) = b(j) * y_sd / sd(j);
            }
        }
        intercept = y_mean - beta.dot(mean);
    }
};

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

#ifndef NDEBUG
double internal_objective(const StandardizedProblem& s, const VectorXd& b, const VectorXd& g,
                          double lam, double lam2) {
    // (1/2n)||y~ - X~ b||^2 + lam ||b||_1 + lam2 ||b||^2, up to the constant 1/2.
    return 0.5 * b.dot(g) - s.xy.dot(b) + lam * b.lpNorm<1>() + lam2 * b.squaredNorm();
}
#endif

// Cyclic coordinate descent with residual-correlation bookkeeping: g = corr*b
// is kept incrementally, so untouched coordinates cost O(1) per sweep.
// Returns sweeps used; throws on hitting the cap.
int coordinate_descent(const StandardizedProblem& s, double lam, double lam2, VectorXd& b,
                       VectorXd& g, const LassoOptions& opt, int sweeps_so_far) {
    const double denom = 1.0 + 2.0 * lam2;
    int sweeps = sweeps_so_far;
    for (;;) {
        double max_delta;
        do {
            if (sweeps >= opt.max_sweeps) {
                return -sweeps;  // caller raises with the last iterate
            }
            ++sweeps;
            max_delta = 0.0;
#ifndef NDEBUG
            const double before = internal_objective(s, b, g, lam, lam2);
#endif
            for (Eigen::Index j = 0; j < s.p; ++j) {
                if (!s.valid[static_cast<size_t>(j)]) continue;
                const double rho = s.xy(j) - g(j) + b(j);
                const double b_new = soft_threshold(rho, lam) / denom;
                const double delta = b_new - b(j);
                if (delta != 0.0) {
                    g += s.corr.col(j) * delta;
                    b(j) = b_new;
                    max_delta = std::max(max_delta, std::abs(delta));
                }
            }
#ifndef NDEBUG
            const double after = internal_objective(s, b, g, lam, lam2);
            assert(after <= before + 1e-10 && "coordinate descent objective increased");
#endif
        } while (max_delta >= opt.tol);

        // Exact stationarity check before accepting convergence.
        double viol = 0.0;
        for (Eigen::Index j = 0; j < s.p; ++j) {
            if (!s.valid[static_cast<size_t>(j)]) continue;
            const double c = s.xy(j) - g(j);
            if (b(j) == 0.0) {
                viol = std::max(viol, std::abs(c) - lam);
            } else {
                viol = std::max(viol, std::abs(c - lam * (b(j) > 0 ? 1.0 : -1.0) - 2.0 * lam2 * b(j)));
            }
        }
        if (viol <= std::max(1e-9, 0.1 * opt.tol)) return sweeps;
    }
}

LassoFit finish_fit(const StandardizedProblem& s, const MatrixXd& X, const VectorXd& y,
                    const VectorXd& b, double lambda, double lambda2, int sweeps) {
    LassoFit fit;
    s.to_original(b, fit.intercept, fit.coefficients);
    fit.lambda = lambda;
    fit.lambda2 = lambda2;
    fit.n_iterations = sweeps;
    const VectorXd resid = y - VectorXd::Constant(y.size(), fit.intercept) - X * fit.coefficients;
    fit.objective = resid.squaredNorm() / (2.0 * static_cast<double>(y.size())) +
                    lambda * fit.coefficients.lpNorm<1>() +
                    lambda2 * fit.coefficients.squaredNorm();
    return fit;
}

}  // namespace

LassoFit lasso_fit(const MatrixXd& X, const VectorXd& y, double lambda, double lambda2,
                   const LassoOptions& options) {
    if (X.rows() != y.size()) throw DataError("lasso_fit: X and y length mismatch");
    if (X.rows() < 1 || X.cols() < 1) throw DataError("lasso_fit: empty problem");
    if (lambda < 0.0 || lambda2 < 0.0) throw ConfigError("lasso_fit: penalties must be >= 0");

    const StandardizedProblem s = StandardizedProblem::build(full_moments(X, y));
    VectorXd b = VectorXd::Zero(s.p);
    VectorXd g = VectorXd::Zero(s.p);
    if (s.y_sd == 0.0) {
        return finish_fit(s, X, y, b, lambda, lambda2, 0);  // constant response
    }
    const double lam = lambda / s.y_sd;
    const int sweeps = coordinate_descent(s, lam, lambda2, b, g, options, 0);
    if (sweeps < 0) {
        LassoFit last = finish_fit(s, X, y, b, lambda, lambda2, -sweeps);
        throw LassoConvergenceError(
            "lasso_fit: no convergence after " + std::to_string(-sweeps) + " sweeps",
            std::move(last), options.tol);
    }
    return finish_fit(s, X, y, b, lambda, lambda2, sweeps);
}

double lasso_lambda_max(const MatrixXd& X, const VectorXd& y) {
    const StandardizedProblem s = StandardizedProblem::build(full_moments(X, y));
    double best = 0.0;
    for (Eigen::Index j = 0; j < s.p; ++j) {
        if (s.valid[static_cast<size_t>(j)]) {
            best = std::max(best, std::abs(s.xy(j)) * s.y_sd);
        }
    }
    return best;
}

double lasso_kkt_violation(const MatrixXd& X, const VectorXd& y, const LassoFit& fit) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const VectorXd r =
        y - VectorXd::Constant(n, fit.intercept) - X * fit.coefficients;
    double viol = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        const double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd == 0.0) continue;
        const double c = ((X.col(j).array() - mean) * r.array()).sum() / (static_cast<double>(n) * sd);
        const double b_std = fit.coefficients(j) * sd;
        if (b_std == 0.0) {
            viol = std::max(viol, std::abs(c) - fit.lambda);
        } else {
            viol = std::max(viol, std::abs(c - fit.lambda * (b_std > 0 ? 1.0 : -1.0) -
                                           2.0 * fit.lambda2 * b_std));
        }
    }
    return std::max(viol, 0.0);
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    grid.reserve(201);
    for (int t = 0; t <= 200; ++t) {
        grid.push_back(std::pow(10.0, -4.0 + 0.02 * static_cast<double>(t)));
    }
    return grid;
}

CVResult cv_select(const MatrixXd& X, const VectorXd& y, const std::vector<double>& grid, int k,
                   uint64_t seed, const LassoOptions& options) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n != y.size()) throw DataError("cv_select: X and y length mismatch");
    if (grid.empty()) throw ConfigError("cv_select: empty lambda grid");
    if (k < 2 || n < k) throw ConfigError("cv_select: need n >= k >= 2");
    for (double l : grid) {
        if (!(l >= 0.0)) throw ConfigError("cv_select: lambda values must be >= 0");
    }

    // Seed-determined fold assignment: shuffle rows, deal round-robin.
    std::vector<int> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(seed);
    rng.shuffle(rows);
    std::vector<std::vector<int>> folds(static_cast<size_t>(k));
    for (size_t t = 0; t < rows.size(); ++t) {
        folds[t % static_cast<size_t>(k)].push_back(rows[t]);
    }

    // Grid visited in decreasing lambda for warm starts.
    const size_t G = grid.size();
    std::vector<size_t> order(G);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return grid[a] > grid[b]; });

    const Moments full = full_moments(X, y);

    CVResult cv;
    cv.lambda_grid = grid;
    cv.mean_mse.assign(G, 0.0);
    cv.std_mse.assign(G, 0.0);
    cv.nnz.assign(G, 0);

    MatrixXd fold_mse(k, static_cast<Eigen::Index>(G));
    std::vector<bool> fold_used(static_cast<size_t>(k), false);

    for (int f = 0; f < k; ++f) {
        const Moments train = difference(full, subset_moments(X, y, folds[static_cast<size_t>(f)]));
        const StandardizedProblem s = StandardizedProblem::build(train);
        if (s.y_sd == 0.0) {
            cv.warnings.push_back("fold " + std::to_string(f) +
                                  " skipped: training response has zero variance");
            continue;
        }
        fold_used[static_cast<size_t>(f)] = true;

        VectorXd b = VectorXd::Zero(p);
        VectorXd g = VectorXd::Zero(p);
        int sweeps = 0;
        double intercept = 0.0;
        VectorXd beta;
        for (size_t oi = 0; oi < G; ++oi) {
            const size_t gi = order[oi];
            sweeps = coordinate_descent(s, grid[gi] / s.y_sd, 0.0, b, g, options, sweeps);
            if (sweeps < 0) {
                throw NumericError("cv_select: coordinate descent did not converge in fold " +
                                   std::to_string(f) + " at lambda " + std::to_string(grid[gi]));
            }
            s.to_original(b, intercept, beta);
            double rss = 0.0;
            for (int r : folds[static_cast<size_t>(f)]) {
                const double e = y(r) - intercept - X.row(r).dot(beta);
                rss += e * e;
            }
            fold_mse(f, static_cast<Eigen::Index>(gi)) =
                rss / static_cast<double>(folds[static_cast<size_t>(f)].size());
        }
    }

    int used = 0;
    for (bool u : fold_used) used += u ? 1 : 0;
    if (used == 0) throw NumericError("cv_select: every fold was skipped");

    for (size_t gi = 0; gi < G; ++gi) {
        double sum = 0.0;
        for (int f = 0; f < k; ++f) {
            if (fold_used[static_cast<size_t>(f)]) sum += fold_mse(f, static_cast<Eigen::Index>(gi));
        }
        const double mean = sum / used;
        cv.mean_mse[gi] = mean;
        double ss = 0.0;
        for (int f = 0; f < k; ++f) {
            if (fold_used[static_cast<size_t>(f)]) {
                const double d = fold_mse(f, static_cast<Eigen::Index>(gi)) - mean;
                ss += d * d;
            }
        }
        cv.std_mse[gi] = used > 1 ? std::sqrt(ss / (used - 1)) : 0.0;
    }

    // Argmin with ties resolved toward the largest lambda.
    int best = -1;
    for (size_t gi = 0; gi < G; ++gi) {
        if (best < 0 || cv.mean_mse[gi] < cv.mean_mse[static_cast<size_t>(best)] ||
            (cv.mean_mse[gi] == cv.mean_mse[static_cast<size_t>(best)] &&
             grid[gi] > grid[static_cast<size_t>(best)])) {
            best = static_cast<int>(gi);
        }
    }
    cv.lambda_cv_index = best;
    cv.lambda_cv = grid[static_cast<size_t>(best)];

    // Full-data path for the per-lambda nonzero counts.
    {
        const StandardizedProblem s = StandardizedProblem::build(full);
        if (s.y_sd > 0.0) {
            VectorXd b = VectorXd::Zero(p);
            VectorXd g = VectorXd::Zero(p);
            int sweeps = 0;
            for (size_t oi = 0; oi < G; ++oi) {
                const size_t gi = order[oi];
                sweeps = coordinate_descent(s, grid[gi] / s.y_sd, 0.0, b, g, options, sweeps);
                if (sweeps < 0) {
                    throw NumericError("cv_select: full-data path did not converge");
                }
                cv.nnz[gi] = static_cast<int>((b.array() != 0.0).count());
            }
        }
    }

    cv.fit_cv = lasso_fit(X, y, cv.lambda_cv, 0.0, options);
    return cv;
}

void save_cv_curve(const CVResult& cv, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CV curve: " + path);
    out << "lambda,mean_mse,std_mse,nnz\n";
    for (size_t i = 0; i < cv.lambda_grid.size(); ++i) {
        out << csv::format_double(cv.lambda_grid[i]) << "," << csv::format_double(cv.mean_mse[i])
            << "," << csv::format_double(cv.std_mse[i]) << "," << cv.nnz[i] << "\n";
    }
}

}  // namespace poolsight

#include "poolsight/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "poolsight/csv.hpp"
#include "poolsight/rng.hpp"

namespace poolsight {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

double quantile_type7(const std::vector<double>& sorted, double q) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FeatureStability summarize(const std::string& name, std::vector<double> samples,
                           const BootstrapOptions& opt) {
    FeatureStability fs;
    fs.name = name;
    const double n = static_cast<double>(samples.size());
    size_t zeros = 0;
    for (double v : samples) zeros += v == 0.0 ? 1 : 0;
    fs.zero_fraction = static_cast<double>(zeros) / n;

    std::sort(samples.begin(), samples.end());
    fs.median = quantile_type7(samples, 0.5);
    fs.q1 = quantile_type7(samples, 0.25);
    fs.q3 = quantile_type7(samples, 0.75);
    const double iqr = fs.q3 - fs.q1;
    const double lo_fence = fs.q1 - 1.5 * iqr;
    const double hi_fence = fs.q3 + 1.5 * iqr;
    fs.whisker_low = fs.q1;
    fs.whisker_high = fs.q3;
    for (double v : samples) {
        if (v >= lo_fence) {
            fs.whisker_low = v;  // first sample at or above the fence
            break;
        }
    }
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
        if (*it <= hi_fence) {
            fs.whisker_high = *it;
            break;
        }
    }

    if (fs.median > 0.0) {
        size_t flips = 0;
        for (double v : samples) flips += v < 0.0 ? 1 : 0;
        fs.flip_fraction = static_cast<double>(flips) / n;
    } else if (fs.median < 0.0) {
        size_t flips = 0;
        for (double v : samples) flips += v > 0.0 ? 1 : 0;
        fs.flip_fraction = static_cast<double>(flips) / n;
    } else {
        fs.flip_fraction = 0.0;
    }
    fs.significant = fs.zero_fraction < opt.significance_zero_fraction &&
                     fs.flip_fraction <= opt.flip_tolerance;
    return fs;
}

}  // namespace

BootstrapReport bootstrap_lasso(const MatrixXd& X, const VectorXd& y,
                                const std::vector<std::string>& feature_names,
                                const BootstrapOptions& options) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n != y.size()) throw DataError("bootstrap_lasso: X and y length mismatch");
    if (options.B < 1) throw ConfigError("bootstrap_lasso: B must be >= 1");
    if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != p) {
        throw DataError("bootstrap_lasso: feature name count mismatch");
    }

    std::vector<std::string> names = feature_names;
    if (names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    }
    const std::vector<double> grid =
        options.lambda_grid.empty() ? default_lambda_grid() : options.lambda_grid;

    VectorXd full_sd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        full_sd(j) = std::sqrt((X.col(j).array() - mean).square().sum() / static_cast<double>(n));
    }

    const int B = options.B;
    MatrixXd samples(B, p);
    std::vector<uint8_t> valid(static_cast<size_t>(B), 0);
    std::vector<std::string> failures(static_cast<size_t>(B));

    auto run_replicate = [&](int b) {
        const uint64_t replicate_seed = derive_seed(options.seed, static_cast<uint64_t>(b));
        Rng rng(replicate_seed);
        MatrixXd Xb(n, p);
        VectorXd yb(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(rng.uniform_index(static_cast<uint64_t>(n)));
            Xb.row(i) = X.row(r);
            yb(i) = y(r);
        }
        try {
            const CVResult cv = cv_select(Xb, yb, grid, options.k,
                                          derive_seed(replicate_seed, 1), options.lasso);
            for (Eigen::Index j = 0; j < p; ++j) {
                double sd = full_sd(j);
                if (!options.full_sample_sd) {
                    const double mean = Xb.col(j).mean();
                    sd = std::sqrt((Xb.col(j).array() - mean).square().sum() /
                                   static_cast<double>(n));
                }
                samples(b, j) = cv.fit_cv.coefficients(j) * sd;
            }
            valid[static_cast<size_t>(b)] = 1;
        } catch (const Error& e) {
            failures[static_cast<size_t>(b)] = e.what();
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1 || B == 1) {
        for (int b = 0; b < B; ++b) run_replicate(b);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const int b = next.fetch_add(1);
                    if (b >= B) return;
                    run_replicate(b);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    BootstrapReport report;
    report.B = B;
    report.k = options.k;
    report.seed = options.seed;
    report.lambda_grid = grid;

    std::vector<int> ok_rows;
    for (int b = 0; b < B; ++b) {
        if (valid[static_cast<size_t>(b)]) {
            ok_rows.push_back(b);
        } else {
            ++report.n_failed_replicates;
            if (report.failure_messages.size() < 10) {
                report.failure_messages.push_back("replicate " + std::to_string(b) + ": " +
                                                  failures[static_cast<size_t>(b)]);
            }
        }
    }
    if (static_cast<double>(report.n_failed_replicates) > 0.01 * static_cast<double>(B)) {
        throw NumericError("bootstrap_lasso: " + std::to_string(report.n_failed_replicates) +
                           " of " + std::to_string(B) + " replicates failed (more than 1%)");
    }
    if (ok_rows.empty()) throw NumericError("bootstrap_lasso: no valid replicates");

    report.standardized_samples.resize(static_cast<Eigen::Index>(ok_rows.size()), p);
    for (size_t i = 0; i < ok_rows.size(); ++i) {
        report.standardized_samples.row(static_cast<Eigen::Index>(i)) = samples.row(ok_rows[i]);
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<double> col(ok_rows.size());
        for (size_t i = 0; i < ok_rows.size(); ++i) {
            col[i] = report.standardized_samples(static_cast<Eigen::Index>(i), j);
        }
        report.features.push_back(summarize(names[static_cast<size_t>(j)], std::move(col), options));
    }
    return report;
}

std::vector<FeatureStability> stability_report(const BootstrapReport& report,
                                               double display_threshold) {
    std::vector<FeatureStability> rows;
    for (const auto& f : report.features) {
        if (f.zero_fraction < display_threshold) rows.push_back(f);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const FeatureStability& a, const FeatureStability& b) {
                         return a.median > b.median;
                     });
    return rows;
}

std::map<std::string, BootstrapReport> stratified_run(const MatrixXd& X, const VectorXd& y,
                                                      const std::vector<std::string>& feature_names,
                                                      const std::vector<std::string>& strata,
                                                      const BootstrapOptions& options) {
    if (static_cast<Eigen::Index>(strata.size()) != X.rows()) {
        throw DataError("stratified_run: strata labels must match row count");
    }
    std::map<std::string, std::vector<int>> groups;
    for (size_t i = 0; i < strata.size(); ++i) {
        groups[strata[i]].push_back(static_cast<int>(i));
    }
    std::map<std::string, BootstrapReport> out;
    for (const auto& [label, rows] : groups) {
        if (rows.size() < static_cast<size_t>(10 * options.k)) {
            throw DataError("stratified_run: stratum '" + label + "' has " +
                            std::to_string(rows.size()) + " rows, needs at least " +
                            std::to_string(10 * options.k));
        }
        MatrixXd Xs(static_cast<Eigen::Index>(rows.size()), X.cols());
        VectorXd ys(static_cast<Eigen::Index>(rows.size()));
        for (size_t i = 0; i < rows.size(); ++i) {
            Xs.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
            ys(static_cast<Eigen::Index>(i)) = y(rows[i]);
        }
        BootstrapOptions sub = options;
        sub.seed = derive_seed(options.seed, hash_label(label));
        out.emplace(label, bootstrap_lasso(Xs, ys, feature_names, sub));
    }
    return out;
}

void save_bootstrap_report(const BootstrapReport& report, const std::string& json_path) {
    json doc;
    doc["B"] = report.B;
    doc["k"] = report.k;
    doc["seed"] = report.seed;
    doc["lambda_grid_size"] = report.lambda_grid.size();
    doc["n_failed_replicates"] = report.n_failed_replicates;
    doc["failures"] = report.failure_messages;
    doc["features"] = json::array();
    for (const auto& f : report.features) {
        doc["features"].push_back({{"name", f.name},
                                   {"median", f.median},
                                   {"q1", f.q1},
                                   {"q3", f.q3},
                                   {"whisker_low", f.whisker_low},
                                   {"whisker_high", f.whisker_high},
                                   {"zero_fraction", f.zero_fraction},
                                   {"flip_fraction", f.flip_fraction},
                                   {"significant", f.significant}});
    }
    std::ofstream out(json_path);
    if (!out) throw DataError("cannot write bootstrap report: " + json_path);
    out << doc.dump(1) << "\n";
}

BootstrapReport load_bootstrap_report(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw DataError("cannot open bootstrap report: " + json_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(json_path + ": JSON parse error: " + std::string(e.what()));
    }
    BootstrapReport report;
    report.B = doc.value("B", 0);
    report.k = doc.value("k", 0);
    report.seed = doc.value("seed", uint64_t{0});
    report.n_failed_replicates = doc.value("n_failed_replicates", 0);
    for (const auto& f : doc.value("features", json::array())) {
        FeatureStability fs;
        fs.name = f.value("name", "");
        fs.median = f.value("median", 0.0);
        fs.q1 = f.value("q1", 0.0);
        fs.q3 = f.value("q3", 0.0);
        fs.whisker_low = f.value("whisker_low", 0.0);
        fs.whisker_high = f.value("whisker_high", 0.0);
        fs.zero_fraction = f.value("zero_fraction", 0.0);
        fs.flip_fraction = f.value("flip_fraction", 0.0);
        fs.significant = f.value("significant", false);
        report.features.push_back(std::move(fs));
    }
    return report;
}

void save_stability_csv(const std::vector<FeatureStability>& rows, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write stability table: " + csv_path);
    out << "name,median,q1,q3,whisker_low,whisker_high,zero_fraction,flip_fraction,significant\n";
    for (const auto& f : rows) {
        out << csv::quote(f.name) << "," << csv::format_double(f.median) << ","
            << csv::format_double(f.q1) << "," << csv::format_double(f.q3) << ","
            << csv::format_double(f.whisker_low) << "," << csv::format_double(f.whisker_high)
            << "," << csv::format_double(f.zero_fraction) << ","
            << csv::format_double(f.flip_fraction) << "," << (f.significant ? 1 : 0) << "\n";
    }
}

void save_samples_binary(const MatrixXd& samples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write samples file: " + path);
    const char magic[8] = {'P', 'S', 'B', 'S', '0', '0', '0', '1'};
    out.write(magic, 8);
    const int64_t rows = samples.rows(), cols = samples.cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            const double v = samples(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
}

MatrixXd load_samples_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open samples file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::string(magic, 8) != "PSBS0001") throw DataError(path + ": bad samples file magic");
    int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (rows < 0 || cols < 0) throw DataError(path + ": corrupt samples header");
    MatrixXd m(rows, cols);
    for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < cols; ++j) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), 8);
            m(i, j) = v;
        }
    }
    if (!in) throw DataError(path + ": truncated samples file");
    return m;
}

}  // namespace poolsight

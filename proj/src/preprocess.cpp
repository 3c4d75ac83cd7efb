#include "poolsight/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "poolsight/regression.hpp"
#include "poolsight/rng.hpp"

namespace poolsight {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Expression evaluation over layer attributes

namespace {

struct ExprParser {
    // Recursive descent over: expr := term (('+'|'-') term)*
    //                         term := factor (('*'|'/') factor)*
    //                         factor := number | ident | '(' expr ')' | '-' factor
    const std::string& src;
    size_t pos = 0;
    const SpatialLayer& layer;
    size_t record;
    bool missing = false;

    ExprParser(const std::string& s, const SpatialLayer& l, size_t r)
        : src(s), layer(l), record(r) {}

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    double parse_expr() {
        double v = parse_term();
        for (;;) {
            if (eat('+')) v += parse_term();
            else if (eat('-')) v -= parse_term();
            else return v;
        }
    }

    double parse_term() {
        double v = parse_factor();
        for (;;) {
            if (eat('*')) {
                v *= parse_factor();
            } else if (eat('/')) {
                const double d = parse_factor();
                if (d == 0.0) missing = true;
                v = missing ? 0.0 : v / d;
            } else {
                return v;
            }
        }
    }

    double parse_factor() {
        skip_ws();
        if (pos >= src.size()) throw ConfigError("formula ended unexpectedly: " + src);
        if (eat('(')) {
            const double v = parse_expr();
            if (!eat(')')) throw ConfigError("missing ')' in formula: " + src);
            return v;
        }
        if (eat('-')) return -parse_factor();
        const char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t end = pos;
            while (end < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[end])) || src[end] == '.' ||
                    src[end] == 'e' || src[end] == 'E' ||
                    ((src[end] == '+' || src[end] == '-') &&
                     (src[end - 1] == 'e' || src[end - 1] == 'E')))) {
                ++end;
            }
            const double v = std::stod(src.substr(pos, end - pos));
            pos = end;
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t end = pos;
            while (end < src.size() && (std::isalnum(static_cast<unsigned char>(src[end])) ||
                                        src[end] == '_')) {
                ++end;
            }
            const std::string name = src.substr(pos, end - pos);
            pos = end;
            const NumericAttribute& attr = layer.numeric_attr(name);  // throws if absent
            if (attr.missing[record]) {
                missing = true;
                return 0.0;
            }
            return attr.values[record];
        }
        throw ConfigError("unexpected character '" + std::string(1, c) + "' in formula: " + src);
    }
};

std::optional<double> eval_expr(const std::string& formula, const SpatialLayer& layer,
                                size_t record) {
    ExprParser p(formula, layer, record);
    const double v = p.parse_expr();
    p.skip_ws();
    if (p.pos != formula.size()) {
        throw ConfigError("trailing characters in formula: " + formula);
    }
    if (p.missing || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::vector<std::optional<double>> evaluate_formula(const SpatialLayer& layer,
                                                    const std::string& formula) {
    std::vector<std::optional<double>> out;
    out.reserve(layer.size());
    for (size_t r = 0; r < layer.size(); ++r) out.push_back(eval_expr(formula, layer, r));
    return out;
}

void RuleSet::validate() const {
    std::map<std::pair<std::string, std::string>, double> fills;
    for (const auto& z : zero_rules) {
        if (z.targets.empty()) throw ConfigError("rule '" + z.name + "' has no targets");
        for (const auto& t : z.targets) {
            auto key = std::make_pair(z.layer, t);
            auto it = fills.find(key);
            if (it != fills.end() && it->second != z.fill) {
                throw ConfigError("target '" + t + "' appears in two rules with conflicting fills");
            }
            fills[key] = z.fill;
        }
    }
}

RuleSet load_ruleset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rule set: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": JSON parse error: " + std::string(e.what()));
    }
    RuleSet rs;
    try {
        for (const auto& d : doc.value("derived", json::array())) {
            rs.derived.push_back({d.value("layer", ""), d.at("target").get<std::string>(),
                                  d.at("formula").get<std::string>()});
        }
        for (const auto& z : doc.value("zero_rules", json::array())) {
            ZeroRule r;
            r.name = z.value("name", "");
            r.layer = z.value("layer", "");
            r.guard = z.at("guard").get<std::string>();
            const std::string op = z.value("op", "==");
            if (op == "==") r.op = GuardOp::Equal;
            else if (op == "<=") r.op = GuardOp::LessEqual;
            else if (op == "missing") r.op = GuardOp::Missing;
            else throw ConfigError(path + ": unknown guard op '" + op + "'");
            r.value = z.value("value", 0.0);
            r.targets = z.at("targets").get<std::vector<std::string>>();
            r.fill = z.value("fill", 0.0);
            rs.zero_rules.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ConfigError(path + ": malformed rule: " + std::string(e.what()));
    }
    rs.validate();
    return rs;
}

void save_ruleset(const RuleSet& rules, const std::string& path) {
    json doc;
    doc["derived"] = json::array();
    for (const auto& d : rules.derived) {
        doc["derived"].push_back(
            {{"layer", d.layer}, {"target", d.target}, {"formula", d.formula}});
    }
    doc["zero_rules"] = json::array();
    for (const auto& z : rules.zero_rules) {
        const char* op =
            z.op == GuardOp::Equal ? "==" : (z.op == GuardOp::LessEqual ? "<=" : "missing");
        doc["zero_rules"].push_back({{"name", z.name},
                                     {"layer", z.layer},
                                     {"guard", z.guard},
                                     {"op", op},
                                     {"value", z.value},
                                     {"targets", z.targets},
                                     {"fill", z.fill}});
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write rule set: " + path);
    out << doc.dump(1) << "\n";
}

std::vector<RuleApplication> apply_missing_rules(std::map<std::string, SpatialLayer>& layers,
                                                 const RuleSet& rules) {
    rules.validate();
    std::vector<RuleApplication> log;

    auto layer_ref = [&](const std::string& name) -> SpatialLayer& {
        auto it = layers.find(name);
        if (it == layers.end()) throw ConfigError("rule references unknown layer '" + name + "'");
        return it->second;
    };

    for (const auto& d : rules.derived) {
        SpatialLayer& layer = layer_ref(d.layer);
        layer.numeric_attr(d.target);  // schema check before mutating
        NumericAttribute& target = layer.numeric[d.target];
        int filled = 0;
        for (size_t r = 0; r < layer.size(); ++r) {
            if (!target.missing[r]) continue;  // only missing cells are filled
            if (auto v = eval_expr(d.formula, layer, r)) {
                target.values[r] = *v;
                target.missing[r] = false;
                ++filled;
            }
        }
        log.push_back({"derived:" + d.target, filled});
    }

    for (const auto& z : rules.zero_rules) {
        SpatialLayer& layer = layer_ref(z.layer);
        for (const auto& t : z.targets) layer.numeric_attr(t);  // schema check
        if (z.op == GuardOp::Missing) layer.numeric_attr(z.guard);
        int filled = 0;
        for (size_t r = 0; r < layer.size(); ++r) {
            bool guard_holds = false;
            if (z.op == GuardOp::Missing) {
                guard_holds = layer.numeric_attr(z.guard).missing[r];
            } else {
                auto v = eval_expr(z.guard, layer, r);
                if (v) {
                    guard_holds = z.op == GuardOp::Equal ? (*v == z.value) : (*v <= z.value);
                }
            }
            if (!guard_holds) continue;
            for (const auto& t : z.targets) {
                NumericAttribute& attr = layer.numeric[t];
                if (attr.missing[r]) {
                    attr.values[r] = z.fill;
                    attr.missing[r] = false;
                    ++filled;
                }
            }
        }
        log.push_back({z.name.empty() ? "zero_rule:" + z.guard : z.name, filled});
    }
    return log;
}

// ---------------------------------------------------------------------------
// Pruning

std::pair<FeatureMatrix, std::vector<std::string>> drop_uninformative(const FeatureMatrix& X,
                                                                      double zero_frac) {
    if (!(zero_frac > 0.0 && zero_frac < 1.0)) {
        throw ConfigError("drop_uninformative: zero_frac must be in (0,1)");
    }
    const Eigen::Index n = X.n_rows();
    std::vector<int> kept;
    std::vector<std::string> dropped;
    for (Eigen::Index j = 0; j < X.n_cols(); ++j) {
        const Eigen::Index zeros = (X.values.col(j).array() == 0.0).count();
        if (static_cast<double>(zeros) / static_cast<double>(n) > zero_frac) {
            dropped.push_back(X.feature_names[static_cast<size_t>(j)]);
        } else {
            kept.push_back(static_cast<int>(j));
        }
    }
    if (kept.empty()) throw DataError("drop_uninformative: every feature is uninformative");
    return {X.select_columns(kept), std::move(dropped)};
}

namespace {

// Pearson correlations; the scaling denominator cancels, so population vs
// sample makes no difference here.
MatrixXd correlation_matrix(const MatrixXd& V) {
    const Eigen::Index p = V.cols();
    MatrixXd centered = V.rowwise() - V.colwise().mean();
    VectorXd norms(p);
    for (Eigen::Index j = 0; j < p; ++j) norms(j) = centered.col(j).norm();
    MatrixXd corr = MatrixXd::Identity(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index l = 0; l < j; ++l) {
            const double r = centered.col(j).dot(centered.col(l)) / (norms(j) * norms(l));
            corr(j, l) = r;
            corr(l, j) = r;
        }
    }
    return corr;
}

std::vector<int> constant_columns(const FeatureMatrix& X) {
    std::vector<int> out;
    for (Eigen::Index j = 0; j < X.n_cols(); ++j) {
        const double first = X.values(0, j);
        if ((X.values.col(j).array() == first).all()) out.push_back(static_cast<int>(j));
    }
    return out;
}

}  // namespace

std::pair<FeatureMatrix, PruneReport> prune_correlated(const FeatureMatrix& X, double threshold,
                                                       const std::vector<std::string>& priority) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("prune_correlated: threshold must be in (0,1)");
    }
    PruneReport report;

    // Constant columns have undefined correlations; treat as uninformative.
    FeatureMatrix work = X;
    {
        const std::vector<int> constants = constant_columns(X);
        if (!constants.empty()) {
            std::set<int> drop(constants.begin(), constants.end());
            std::vector<int> kept;
            for (Eigen::Index j = 0; j < X.n_cols(); ++j) {
                if (drop.count(static_cast<int>(j))) {
                    report.dropped_uninformative.push_back(
                        X.feature_names[static_cast<size_t>(j)]);
                } else {
                    kept.push_back(static_cast<int>(j));
                }
            }
            if (kept.empty()) throw DataError("prune_correlated: all columns constant");
            work = X.select_columns(kept);
        }
    }

    const Eigen::Index p = work.n_cols();
    const MatrixXd corr = correlation_matrix(work.values);

    // Priority-ordered greedy grouping.
    std::vector<int> order;
    std::vector<bool> placed(static_cast<size_t>(p), false);
    for (const auto& name : priority) {
        const int j = work.column(name);
        if (j >= 0 && !placed[static_cast<size_t>(j)]) {
            order.push_back(j);
            placed[static_cast<size_t>(j)] = true;
        }
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!placed[static_cast<size_t>(j)]) order.push_back(static_cast<int>(j));
    }

    std::vector<bool> assigned(static_cast<size_t>(p), false);
    std::vector<int> kept;
    for (size_t a = 0; a < order.size(); ++a) {
        const int j = order[a];
        if (assigned[static_cast<size_t>(j)]) continue;
        assigned[static_cast<size_t>(j)] = true;
        std::vector<int> group{j};
        for (size_t b = a + 1; b < order.size(); ++b) {
            const int l = order[b];
            if (assigned[static_cast<size_t>(l)]) continue;
            bool all_above = true;
            for (int g : group) {
                if (std::abs(corr(g, l)) <= threshold) {
                    all_above = false;
                    break;
                }
            }
            if (all_above) {
                group.push_back(l);
                assigned[static_cast<size_t>(l)] = true;
            }
        }
        kept.push_back(j);
        if (group.size() > 1) {
            CorrelationGroup cg;
            cg.representative = work.feature_names[static_cast<size_t>(j)];
            for (size_t g = 1; g < group.size(); ++g) {
                cg.removed.push_back(work.feature_names[static_cast<size_t>(group[g])]);
            }
            report.correlation_groups.push_back(std::move(cg));
        }
    }
    std::sort(kept.begin(), kept.end());  // preserve original column order
    return {work.select_columns(kept), std::move(report)};
}

namespace {

// VIFs via the inverse correlation matrix: VIF_j = (R^-1)_jj. A near-zero
// eigenvalue marks an exact dependency; features loading on it get +inf.
VectorXd vif_values(const MatrixXd& corr) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(corr);
    const VectorXd& evals = es.eigenvalues();
    const MatrixXd& evecs = es.eigenvectors();
    const Eigen::Index p = corr.rows();
    const double eps = 1e-12 * std::max(evals.cwiseAbs().maxCoeff(), 1.0);
    VectorXd vif = VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        double acc = 0.0;
        bool infinite = false;
        for (Eigen::Index k = 0; k < p; ++k) {
            const double load = evecs(j, k) * evecs(j, k);
            if (evals(k) <= eps) {
                if (load > 1e-10) infinite = true;
            } else {
                acc += load / evals(k);
            }
        }
        vif(j) = infinite ? std::numeric_limits<double>::infinity() : acc;
    }
    return vif;
}

}  // namespace

std::pair<FeatureMatrix, PruneReport> vif_eliminate(const FeatureMatrix& X, double threshold) {
    if (!(threshold > 1.0)) throw ConfigError("vif_eliminate: threshold must exceed 1");
    PruneReport report;
    FeatureMatrix work = X;

    if (!constant_columns(work).empty()) {
        throw DataError(
            "vif_eliminate: constant column present; prune uninformative features first");
    }

    for (;;) {
        const Eigen::Index p = work.n_cols();
        if (work.n_rows() <= p) {
            throw NumericError("vif_eliminate: needs n > p (n=" + std::to_string(work.n_rows()) +
                               ", p=" + std::to_string(p) + ")");
        }
        const MatrixXd corr = correlation_matrix(work.values);
        if (p > 1) {
            const VectorXd vif = vif_values(corr);
            Eigen::Index worst = 0;
            for (Eigen::Index j = 1; j < p; ++j) {
                if (vif(j) > vif(worst)) worst = j;  // ties keep the lowest index
            }
            if (vif(worst) >= threshold) {
                report.vif_elimination_order.push_back(
                    {work.feature_names[static_cast<size_t>(worst)], vif(worst)});
                std::vector<int> kept;
                for (Eigen::Index j = 0; j < p; ++j) {
                    if (j != worst) kept.push_back(static_cast<int>(j));
                }
                work = work.select_columns(kept);
                continue;
            }
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(corr);
        report.eigen_diagnostics = {es.eigenvalues().minCoeff(), es.eigenvalues().sum(),
                                    static_cast<int>(p)};
        break;
    }
    return {std::move(work), std::move(report)};
}

void save_prune_report(const PruneReport& report, const std::string& path) {
    json doc;
    doc["dropped_uninformative"] = report.dropped_uninformative;
    doc["correlation_groups"] = json::array();
    for (const auto& g : report.correlation_groups) {
        doc["correlation_groups"].push_back(
            {{"representative", g.representative}, {"removed", g.removed}});
    }
    doc["vif_elimination_order"] = json::array();
    for (const auto& s : report.vif_elimination_order) {
        doc["vif_elimination_order"].push_back(
            {{"name", s.name}, {"vif", std::isinf(s.vif) ? json("inf") : json(s.vif)}});
    }
    doc["eigen_diagnostics"] = {{"min_eigenvalue", report.eigen_diagnostics.min_eigenvalue},
                                {"eigenvalue_sum", report.eigen_diagnostics.eigenvalue_sum},
                                {"p", report.eigen_diagnostics.p}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write prune report: " + path);
    out << doc.dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// Response transforms

TransformKind transform_kind_from_string(const std::string& s) {
    if (s == "identity") return TransformKind::Identity;
    if (s == "sqrt") return TransformKind::Sqrt;
    if (s == "square") return TransformKind::Square;
    if (s == "log") return TransformKind::Log;
    if (s == "box-cox") return TransformKind::BoxCox;
    throw ConfigError("unknown response transform '" + s + "'");
}

std::string to_string(TransformKind k) {
    switch (k) {
    case TransformKind::Identity: return "identity";
    case TransformKind::Sqrt: return "sqrt";
    case TransformKind::Square: return "square";
    case TransformKind::Log: return "log";
    case TransformKind::BoxCox: return "box-cox";
    }
    return "?";
}

Eigen::VectorXd ResponseTransform::apply(const Eigen::VectorXd& y) const {
    const bool needs_positive =
        kind == TransformKind::Sqrt || kind == TransformKind::Log || kind == TransformKind::BoxCox;
    if (needs_positive && (y.array() <= 0.0).any()) {
        throw DataError("response transform '" + to_string(kind) + "' requires positive values");
    }
    VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        switch (kind) {
        case TransformKind::Identity: out(i) = y(i); break;
        case TransformKind::Sqrt: out(i) = std::sqrt(y(i)); break;
        case TransformKind::Square: out(i) = y(i) * y(i); break;
        case TransformKind::Log: out(i) = std::log(y(i)); break;
        case TransformKind::BoxCox:
            out(i) = lambda == 0.0 ? std::log(y(i)) : (std::pow(y(i), lambda) - 1.0) / lambda;
            break;
        }
    }
    return out;
}

Eigen::VectorXd ResponseTransform::invert(const Eigen::VectorXd& y) const {
    VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        switch (kind) {
        case TransformKind::Identity: out(i) = y(i); break;
        case TransformKind::Sqrt: out(i) = y(i) * y(i); break;
        case TransformKind::Square:
            if (y(i) < 0.0) throw DataError("cannot invert square transform of a negative value");
            out(i) = std::sqrt(y(i));
            break;
        case TransformKind::Log: out(i) = std::exp(y(i)); break;
        case TransformKind::BoxCox: {
            if (lambda == 0.0) {
                out(i) = std::exp(y(i));
            } else {
                const double base = lambda * y(i) + 1.0;
                if (base <= 0.0) throw DataError("cannot invert Box-Cox value outside the image");
                out(i) = std::pow(base, 1.0 / lambda);
            }
            break;
        }
        }
    }
    return out;
}

std::vector<std::pair<double, double>> residual_plot_data(const Eigen::MatrixXd& X,
                                                          const Eigen::VectorXd& y) {
    const OlsFit fit = ols_fit(X, y);
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        out.emplace_back(y(i) - fit.residuals(i), fit.residuals(i));
    }
    return out;
}

namespace {

double kfold_ols_mse(const MatrixXd& X, const VectorXd& y, int k, uint64_t seed) {
    const Eigen::Index n = X.rows();
    std::vector<int> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(seed);
    rng.shuffle(rows);

    double total_sq = 0.0;
    Eigen::Index total_count = 0;
    for (int f = 0; f < k; ++f) {
        std::vector<int> test, train;
        for (size_t t = 0; t < rows.size(); ++t) {
            (static_cast<int>(t % static_cast<size_t>(k)) == f ? test : train).push_back(rows[t]);
        }
        MatrixXd D(train.size(), X.cols() + 1);
        VectorXd yt(train.size());
        for (size_t i = 0; i < train.size(); ++i) {
            D(static_cast<Eigen::Index>(i), 0) = 1.0;
            D.row(static_cast<Eigen::Index>(i)).tail(X.cols()) = X.row(train[i]);
            yt(static_cast<Eigen::Index>(i)) = y(train[i]);
        }
        const VectorXd beta = D.colPivHouseholderQr().solve(yt);
        for (int r : test) {
            const double pred = beta(0) + X.row(r).dot(beta.tail(X.cols()));
            const double e = y(r) - pred;
            total_sq += e * e;
            ++total_count;
        }
    }
    return total_sq / static_cast<double>(total_count);
}

bool is_binary_column(const VectorXd& col) {
    return ((col.array() == 0.0) || (col.array() == 1.0)).all();
}

}  // namespace

ExpansionReport nonlinear_expansion_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          int k, uint64_t seed) {
    if (k < 2 || X.rows() < k) throw ConfigError("nonlinear_expansion_check: need n >= k >= 2");
    ExpansionReport rep;
    rep.p_base = static_cast<int>(X.cols());
    rep.cv_mse_base = kfold_ols_mse(X, y, k, seed);

    std::vector<VectorXd> extra;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const VectorXd col = X.col(j);
        if (is_binary_column(col)) continue;
        if ((col.array() >= 0.0).all()) extra.push_back(col.array().sqrt());
        extra.push_back(col.array().square());
        if ((col.array() > -1.0).all()) extra.push_back((col.array() + 1.0).log());
    }
    MatrixXd ext(X.rows(), X.cols() + static_cast<Eigen::Index>(extra.size()));
    ext.leftCols(X.cols()) = X;
    for (size_t e = 0; e < extra.size(); ++e) {
        ext.col(X.cols() + static_cast<Eigen::Index>(e)) = extra[e];
    }
    rep.p_expanded = static_cast<int>(ext.cols());
    rep.cv_mse_expanded = kfold_ols_mse(ext, y, k, seed);
    return rep;
}

// ---------------------------------------------------------------------------
// Cook's distance

CooksResult cooks_filter(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double threshold) {
    const OlsFit fit = ols_fit(X, y);
    const Eigen::Index n = X.rows();
    const double p = static_cast<double>(X.cols() + 1);  // parameters incl. intercept
    const double dof = static_cast<double>(n) - p;
    if (dof <= 0.0) throw NumericError("cooks_filter: no residual degrees of freedom");
    const double s2 = fit.residuals.squaredNorm() / dof;
    if (s2 == 0.0) throw NumericError("cooks_filter: exact fit, distances undefined");

    CooksResult out;
    out.distances.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = fit.leverages(i);
        const double one_minus = 1.0 - h;
        if (one_minus <= 1e-12) {
            out.distances(i) = std::numeric_limits<double>::infinity();
        } else {
            const double r = fit.residuals(i);
            out.distances(i) = r * r * h / (p * s2 * one_minus * one_minus);
        }
        if (out.distances(i) > threshold) out.removed_rows.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace poolsight

#include "poolsight/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "poolsight/csv.hpp"
#include "poolsight/decomposition.hpp"
#include "poolsight/distfit.hpp"
#include "poolsight/features.hpp"
#include "poolsight/inference.hpp"
#include "poolsight/layers.hpp"
#include "poolsight/matrix.hpp"
#include "poolsight/preprocess.hpp"
#include "poolsight/regression.hpp"
#include "poolsight/rng.hpp"

namespace poolsight {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Paths {
    fs::path root;

    explicit Paths(const PipelineConfig& cfg) : root(cfg.output_dir) {}

    fs::path extract_dir() const { return root / "01_extract"; }
    fs::path preprocess_dir() const { return root / "02_preprocess"; }
    fs::path fit_dir() const { return root / "03_fit"; }
    fs::path bootstrap_dir() const { return root / "04_bootstrap"; }
    fs::path distfit_dir() const { return root / "05_distfit"; }
    fs::path decompose_dir() const { return root / "06_decompose"; }
    fs::path sweep_dir() const { return root / "07_radius_sweep"; }

    fs::path manifest() const { return root / "manifest.json"; }
    fs::path features_csv() const { return extract_dir() / "features.csv"; }
    fs::path features_sidecar() const { return extract_dir() / "features.json"; }
    fs::path response_csv() const { return extract_dir() / "response.csv"; }
    fs::path pools_csv() const { return extract_dir() / "pools.csv"; }
    fs::path analysis_csv() const { return preprocess_dir() / "analysis.csv"; }
    fs::path analysis_sidecar() const { return preprocess_dir() / "analysis.json"; }
    fs::path analysis_response() const { return preprocess_dir() / "analysis_response.csv"; }
    fs::path analysis_raw_response() const {
        return preprocess_dir() / "analysis_raw_response.csv";
    }
    fs::path bootstrap_json() const { return bootstrap_dir() / "bootstrap.json"; }
    fs::path stability_csv() const { return bootstrap_dir() / "stability.csv"; }
};

json grid_to_json(const std::vector<double>& grid) {
    json arr = json::array();
    for (double v : grid) arr.push_back(v);
    return arr;
}

json config_to_json(const PipelineConfig& c) {
    json j;
    j["layer_paths"] = c.layer_paths;
    j["stations_path"] = c.stations_path;
    j["events_path"] = c.events_path;
    j["features_config_path"] = c.features_config_path;
    j["rules_path"] = c.rules_path;
    j["matrix_path"] = c.matrix_path;
    j["matrix_sidecar_path"] = c.matrix_sidecar_path;
    j["response_path"] = c.response_path;
    j["pool_merge_radius_m"] = c.pool_merge_radius_m;
    j["buffer_radius_m"] = c.buffer_radius_m;
    j["zero_fraction"] = c.zero_fraction;
    j["correlation_threshold"] = c.correlation_threshold;
    j["vif_threshold"] = c.vif_threshold;
    j["coverage_threshold"] = c.coverage_threshold;
    j["imputation_threshold"] = c.imputation_threshold;
    j["cooks_threshold"] = c.cooks_threshold;
    j["response_metric"] = c.response_metric;
    j["response_transform"] = c.response_transform;
    j["box_cox_lambda"] = c.box_cox_lambda;
    j["lambda_grid"] = grid_to_json(c.lambda_grid);
    j["k_folds"] = c.k_folds;
    j["bootstrap_B"] = c.bootstrap_B;
    j["significance_zero_fraction"] = c.significance_zero_fraction;
    j["display_zero_fraction"] = c.display_zero_fraction;
    j["flip_tolerance"] = c.flip_tolerance;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["strata_column"] = c.strata_column;
    j["dump_samples"] = c.dump_samples;
    j["correlation_priority"] = c.correlation_priority;
    j["sweep_radii"] = grid_to_json(c.sweep_radii);
    j["output_dir"] = c.output_dir;
    return j;
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig c;
    if (j.contains("layer_paths")) {
        for (const auto& [k, v] : j["layer_paths"].items()) c.layer_paths[k] = v;
    }
    c.stations_path = j.value("stations_path", c.stations_path);
    c.events_path = j.value("events_path", c.events_path);
    c.features_config_path = j.value("features_config_path", c.features_config_path);
    c.rules_path = j.value("rules_path", c.rules_path);
    c.matrix_path = j.value("matrix_path", c.matrix_path);
    c.matrix_sidecar_path = j.value("matrix_sidecar_path", c.matrix_sidecar_path);
    c.response_path = j.value("response_path", c.response_path);
    c.pool_merge_radius_m = j.value("pool_merge_radius_m", c.pool_merge_radius_m);
    c.buffer_radius_m = j.value("buffer_radius_m", c.buffer_radius_m);
    c.zero_fraction = j.value("zero_fraction", c.zero_fraction);
    c.correlation_threshold = j.value("correlation_threshold", c.correlation_threshold);
    c.vif_threshold = j.value("vif_threshold", c.vif_threshold);
    c.coverage_threshold = j.value("coverage_threshold", c.coverage_threshold);
    c.imputation_threshold = j.value("imputation_threshold", c.imputation_threshold);
    c.cooks_threshold = j.value("cooks_threshold", c.cooks_threshold);
    c.response_metric = j.value("response_metric", c.response_metric);
    c.response_transform = j.value("response_transform", c.response_transform);
    c.box_cox_lambda = j.value("box_cox_lambda", c.box_cox_lambda);
    if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    c.k_folds = j.value("k_folds", c.k_folds);
    c.bootstrap_B = j.value("bootstrap_B", c.bootstrap_B);
    c.significance_zero_fraction =
        j.value("significance_zero_fraction", c.significance_zero_fraction);
    c.display_zero_fraction = j.value("display_zero_fraction", c.display_zero_fraction);
    c.flip_tolerance = j.value("flip_tolerance", c.flip_tolerance);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.strata_column = j.value("strata_column", c.strata_column);
    c.dump_samples = j.value("dump_samples", c.dump_samples);
    if (j.contains("correlation_priority")) {
        c.correlation_priority = j["correlation_priority"].get<std::vector<std::string>>();
    }
    if (j.contains("sweep_radii")) c.sweep_radii = j["sweep_radii"].get<std::vector<double>>();
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

void validate_config(const PipelineConfig& c) {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(c.pool_merge_radius_m > 0.0) || !(c.buffer_radius_m > 0.0)) {
        throw ConfigError("pipeline: radii must be positive");
    }
    if (!in_unit(c.zero_fraction) || !in_unit(c.correlation_threshold) ||
        !in_unit(c.coverage_threshold) || !in_unit(c.imputation_threshold) ||
        !in_unit(c.significance_zero_fraction) || !in_unit(c.display_zero_fraction)) {
        throw ConfigError("pipeline: fraction thresholds must lie in (0,1)");
    }
    if (!(c.vif_threshold > 1.0)) throw ConfigError("pipeline: VIF threshold must exceed 1");
    if (!(c.cooks_threshold > 0.0)) throw ConfigError("pipeline: Cook's threshold must be positive");
    if (c.k_folds < 2) throw ConfigError("pipeline: k_folds must be >= 2");
    if (c.bootstrap_B < 1) throw ConfigError("pipeline: bootstrap_B must be >= 1");
    if (!(c.flip_tolerance >= 0.0 && c.flip_tolerance < 1.0)) {
        throw ConfigError("pipeline: flip_tolerance must lie in [0,1)");
    }
    if (c.output_dir.empty()) throw ConfigError("pipeline: output_dir must be set");
    transform_kind_from_string(c.response_transform);  // validates the name
    const std::set<std::string> metrics{"energy", "energy_per_point", "max_point_energy",
                                        "energy_per_capacity"};
    if (!metrics.count(c.response_metric)) {
        throw ConfigError("pipeline: unknown response metric '" + c.response_metric + "'");
    }
}

SpatialLayer load_layer_file(const std::string& name, const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
        return load_points_csv(path, name);
    }
    return load_geojson(path, name);
}

struct StationTable {
    std::vector<Station> stations;
    std::map<int64_t, std::map<std::string, std::string>> extra;  // station -> column -> value
    std::vector<std::string> extra_columns;
};

StationTable load_stations(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    const int c_id = t.require_column("station_id", path);
    const int c_x = t.require_column("x", path);
    const int c_y = t.require_column("y", path);
    StationTable out;
    for (size_t c = 0; c < t.header.size(); ++c) {
        if (static_cast<int>(c) != c_id && static_cast<int>(c) != c_x &&
            static_cast<int>(c) != c_y) {
            out.extra_columns.push_back(t.header[c]);
        }
    }
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto id = csv::parse_double(row[static_cast<size_t>(c_id)]);
        auto x = csv::parse_double(row[static_cast<size_t>(c_x)]);
        auto y = csv::parse_double(row[static_cast<size_t>(c_y)]);
        if (!id || !x || !y) {
            throw DataError(path + ": malformed station row " + std::to_string(i + 2));
        }
        const auto sid = static_cast<int64_t>(*id);
        out.stations.push_back({sid, {*x, *y}});
        for (size_t c = 0; c < t.header.size(); ++c) {
            if (static_cast<int>(c) != c_id && static_cast<int>(c) != c_x &&
                static_cast<int>(c) != c_y) {
                out.extra[sid][t.header[c]] = row[c];
            }
        }
    }
    if (out.stations.empty()) throw DataError(path + ": no stations");
    return out;
}

std::string pool_id_of(int64_t representative) { return "p" + std::to_string(representative); }

struct PoolsArtifact {
    std::vector<PoolSite> pools;
    std::map<std::string, std::string> member_to_pool;  // member id string -> pool id
    std::vector<int> n_members;
    std::vector<std::map<std::string, std::string>> extra;  // per pool, from representative
};

PoolsArtifact build_pools(const StationTable& st, double merge_radius) {
    PoolsArtifact out;
    const auto groups = merge_pools(st.stations, merge_radius);
    for (const auto& g : groups) {
        const std::string pid = pool_id_of(g.representative_id);
        out.pools.push_back({pid, g.location});
        out.n_members.push_back(static_cast<int>(g.member_ids.size()));
        for (int64_t m : g.member_ids) {
            out.member_to_pool[std::to_string(m)] = pid;
            out.member_to_pool[pool_id_of(m)] = pid;
        }
        auto it = st.extra.find(g.representative_id);
        out.extra.push_back(it == st.extra.end() ? std::map<std::string, std::string>{}
                                                 : it->second);
    }
    return out;
}

// Per-pool metric values keyed by pool id, with event pool ids remapped onto
// merged pools.
std::map<std::string, PoolUsage> usages_by_pool(const std::string& events_path,
                                                const PoolsArtifact& pools) {
    std::vector<ChargingEvent> events = load_events_csv(events_path);
    for (auto& e : events) {
        auto it = pools.member_to_pool.find(e.pool_id);
        if (it != pools.member_to_pool.end()) e.pool_id = it->second;
    }
    std::map<std::string, PoolUsage> out;
    for (auto& u : pool_metrics(events)) out.emplace(u.pool_id, std::move(u));
    return out;
}

double metric_value(const PoolUsage& u, const std::string& metric) {
    if (metric == "energy") return u.energy_kwh;
    if (metric == "energy_per_point") return u.energy_per_point;
    if (metric == "max_point_energy") return u.max_point_energy;
    return u.energy_per_capacity;
}

ResponseTransform transform_of(const PipelineConfig& cfg) {
    return {transform_kind_from_string(cfg.response_transform), cfg.box_cox_lambda};
}

std::vector<double> effective_grid(const PipelineConfig& cfg) {
    return cfg.lambda_grid.empty() ? default_lambda_grid() : cfg.lambda_grid;
}

std::map<std::string, SpatialLayer> load_and_patch_layers(const PipelineConfig& cfg,
                                                          std::vector<RuleApplication>* log) {
    std::map<std::string, SpatialLayer> layers;
    for (const auto& [name, path] : cfg.layer_paths) {
        layers.emplace(name, load_layer_file(name, path));
    }
    if (!cfg.rules_path.empty()) {
        const RuleSet rules = load_ruleset(cfg.rules_path);
        auto applied = apply_missing_rules(layers, rules);
        if (log) *log = std::move(applied);
    }
    return layers;
}

json error_report(const std::string& stage, const Error& e) {
    return json{{"stage", stage}, {"error", e.what()}, {"exit_code", e.exit_code()}};
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pipeline config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": JSON parse error: " + std::string(e.what()));
    }
    // A manifest wraps the resolved config under "config".
    const json& body = doc.contains("config") ? doc["config"] : doc;
    PipelineConfig cfg;
    try {
        cfg = config_from_json(body);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": malformed config: " + std::string(e.what()));
    }
    validate_config(cfg);
    return cfg;
}

void save_manifest(const PipelineConfig& config, const std::string& path) {
    json doc;
    doc["tool"] = "poolsight";
    doc["format_version"] = 1;
    doc["config"] = config_to_json(config);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << doc.dump(1) << "\n";
}

void stage_extract(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.extract_dir());

    if (!cfg.matrix_path.empty()) {
        // Prebuilt-matrix entry point: copy the inputs into the artifact
        // layout so later stages read from one place.
        FeatureMatrix m = load_matrix(cfg.matrix_path, cfg.matrix_sidecar_path);
        save_matrix(m, paths.features_csv().string(), paths.features_sidecar().string());
        if (cfg.response_path.empty()) {
            throw ConfigError("pipeline: matrix entry point requires response_path");
        }
        auto [ids, y] = load_response(cfg.response_path);
        save_response(ids, y, paths.response_csv().string());
        std::ofstream out(paths.pools_csv());
        out << "pool_id,x,y,n_members\n";
        for (const auto& id : ids) out << csv::quote(id) << ",0,0,1\n";
        save_extraction_report({}, (paths.extract_dir() / "extract_report.json").string());
        return;
    }

    if (cfg.layer_paths.empty() || cfg.stations_path.empty() || cfg.events_path.empty() ||
        cfg.features_config_path.empty()) {
        throw ConfigError(
            "pipeline: need layers, stations, events and a feature config (or a prebuilt matrix)");
    }

    std::vector<RuleApplication> rule_log;
    auto layers = load_and_patch_layers(cfg, &rule_log);
    {
        json doc = json::array();
        for (const auto& r : rule_log) {
            doc.push_back({{"rule", r.rule}, {"cells_filled", r.cells_filled}});
        }
        std::ofstream out(paths.extract_dir() / "rules_report.json");
        out << doc.dump(1) << "\n";
    }

    const StationTable stations = load_stations(cfg.stations_path);
    const PoolsArtifact pools = build_pools(stations, cfg.pool_merge_radius_m);
    const auto usages = usages_by_pool(cfg.events_path, pools);

    // Pools without events cannot enter the analysis; record them.
    std::vector<PoolSite> kept;
    std::vector<int> kept_members;
    std::vector<std::map<std::string, std::string>> kept_extra;
    std::vector<std::string> skipped;
    for (size_t i = 0; i < pools.pools.size(); ++i) {
        if (usages.count(pools.pools[i].id)) {
            kept.push_back(pools.pools[i]);
            kept_members.push_back(pools.n_members[i]);
            kept_extra.push_back(pools.extra[i]);
        } else {
            skipped.push_back(pools.pools[i].id);
        }
    }
    if (kept.empty()) throw DataError("pipeline: no pool has any charging events");

    const auto feature_config = load_feature_config(cfg.features_config_path);
    ExtractionSettings settings;
    settings.radius_m = cfg.buffer_radius_m;
    settings.coverage_threshold = cfg.coverage_threshold;
    settings.imputation_threshold = cfg.imputation_threshold;
    Assembled assembled = assemble_matrix(kept, layers, feature_config, settings);
    save_matrix(assembled.matrix, paths.features_csv().string(),
                paths.features_sidecar().string());
    save_extraction_report(assembled.report,
                           (paths.extract_dir() / "extract_report.json").string());

    Eigen::VectorXd y(static_cast<Eigen::Index>(kept.size()));
    std::vector<std::string> ids;
    for (size_t i = 0; i < kept.size(); ++i) {
        ids.push_back(kept[i].id);
        y(static_cast<Eigen::Index>(i)) = metric_value(usages.at(kept[i].id), cfg.response_metric);
    }
    save_response(ids, y, paths.response_csv().string());

    {
        std::ofstream out(paths.pools_csv());
        if (!out) throw DataError("cannot write pools.csv");
        out << "pool_id,x,y,n_members";
        for (const auto& c : stations.extra_columns) out << "," << csv::quote(c);
        out << "\n";
        for (size_t i = 0; i < kept.size(); ++i) {
            out << csv::quote(kept[i].id) << "," << csv::format_double(kept[i].location.x) << ","
                << csv::format_double(kept[i].location.y) << "," << kept_members[i];
            for (const auto& c : stations.extra_columns) {
                auto it = kept_extra[i].find(c);
                out << "," << csv::quote(it == kept_extra[i].end() ? "" : it->second);
            }
            out << "\n";
        }
    }
    if (!skipped.empty()) {
        json doc = {{"pools_without_events", skipped}};
        std::ofstream out(paths.extract_dir() / "skipped_pools.json");
        out << doc.dump(1) << "\n";
    }
}

void stage_preprocess(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.preprocess_dir());

    FeatureMatrix X =
        load_matrix(paths.features_csv().string(), paths.features_sidecar().string());
    auto [ids, y_raw] = load_response(paths.response_csv().string());

    auto [x1, dropped_zero] = drop_uninformative(X, cfg.zero_fraction);
    auto [x2, corr_report] = prune_correlated(x1, cfg.correlation_threshold,
                                              cfg.correlation_priority);
    auto [x3, vif_report] = vif_eliminate(x2, cfg.vif_threshold);

    PruneReport merged = corr_report;
    merged.dropped_uninformative.insert(merged.dropped_uninformative.begin(),
                                        dropped_zero.begin(), dropped_zero.end());
    merged.vif_elimination_order = vif_report.vif_elimination_order;
    merged.eigen_diagnostics = vif_report.eigen_diagnostics;
    save_prune_report(merged, (paths.preprocess_dir() / "prune_report.json").string());

    const ResponseTransform transform = transform_of(cfg);
    const Eigen::VectorXd y_t = transform.apply(y_raw);
    save_response(ids, y_t, (paths.preprocess_dir() / "transformed_response.csv").string());

    {
        // Residual diagnostics for the transform choice.
        auto points = residual_plot_data(x3.values, y_t);
        std::ofstream out(paths.preprocess_dir() / "residuals.csv");
        out << "fitted,residual\n";
        for (const auto& [f, r] : points) {
            out << csv::format_double(f) << "," << csv::format_double(r) << "\n";
        }
    }

    const CooksResult cooks = cooks_filter(x3.values, y_t, cfg.cooks_threshold);
    {
        json doc;
        doc["threshold"] = cfg.cooks_threshold;
        doc["distances"] = json::array();
        for (Eigen::Index i = 0; i < cooks.distances.size(); ++i) {
            const double d = cooks.distances(i);
            doc["distances"].push_back({{"pool_id", ids[static_cast<size_t>(i)]},
                                        {"cooks_distance", std::isinf(d) ? json("inf") : json(d)}});
        }
        doc["removed"] = json::array();
        for (int r : cooks.removed_rows) doc["removed"].push_back(ids[static_cast<size_t>(r)]);
        std::ofstream out(paths.preprocess_dir() / "cooks.json");
        out << doc.dump(1) << "\n";
    }

    std::vector<int> kept_rows;
    std::set<int> removed(cooks.removed_rows.begin(), cooks.removed_rows.end());
    for (Eigen::Index i = 0; i < x3.n_rows(); ++i) {
        if (!removed.count(static_cast<int>(i))) kept_rows.push_back(static_cast<int>(i));
    }
    FeatureMatrix analysis = x3.select_rows(kept_rows);
    Eigen::VectorXd y_kept(static_cast<Eigen::Index>(kept_rows.size()));
    Eigen::VectorXd y_raw_kept(static_cast<Eigen::Index>(kept_rows.size()));
    std::vector<std::string> ids_kept;
    for (size_t i = 0; i < kept_rows.size(); ++i) {
        y_kept(static_cast<Eigen::Index>(i)) = y_t(kept_rows[i]);
        y_raw_kept(static_cast<Eigen::Index>(i)) = y_raw(kept_rows[i]);
        ids_kept.push_back(ids[static_cast<size_t>(kept_rows[i])]);
    }
    save_matrix(analysis, paths.analysis_csv().string(), paths.analysis_sidecar().string());
    save_response(ids_kept, y_kept, paths.analysis_response().string());
    save_response(ids_kept, y_raw_kept, paths.analysis_raw_response().string());
}

void stage_fit(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.fit_dir());

    FeatureMatrix X = load_matrix(paths.analysis_csv().string(), paths.analysis_sidecar().string());
    auto [ids, y] = load_response(paths.analysis_response().string());
    auto [ids_raw, y_raw] = load_response(paths.analysis_raw_response().string());

    const CVResult cv =
        cv_select(X.values, y, effective_grid(cfg), cfg.k_folds, derive_seed(cfg.seed, hash_label("fit")));
    save_cv_curve(cv, (paths.fit_dir() / "cv_curve.csv").string());

    // In-sample MSE on both scales (the transformed scale drives selection;
    // the original scale is reported for interpretation).
    const Eigen::VectorXd pred =
        Eigen::VectorXd::Constant(y.size(), cv.fit_cv.intercept) + X.values * cv.fit_cv.coefficients;
    const double mse_transformed = (y - pred).squaredNorm() / static_cast<double>(y.size());
    const ResponseTransform transform = transform_of(cfg);
    const Eigen::VectorXd pred_raw = transform.invert(pred);
    const double mse_original = (y_raw - pred_raw).squaredNorm() / static_cast<double>(y.size());

    json doc;
    doc["lambda_cv"] = cv.lambda_cv;
    doc["lambda_cv_index"] = cv.lambda_cv_index;
    doc["cv_mse_at_lambda"] = cv.mean_mse[static_cast<size_t>(cv.lambda_cv_index)];
    doc["cv_mse_std_at_lambda"] = cv.std_mse[static_cast<size_t>(cv.lambda_cv_index)];
    doc["in_sample_mse_transformed"] = mse_transformed;
    doc["in_sample_mse_original_scale"] = mse_original;
    doc["intercept"] = cv.fit_cv.intercept;
    doc["objective"] = cv.fit_cv.objective;
    doc["n_iterations"] = cv.fit_cv.n_iterations;
    doc["nonzero"] = static_cast<int>((cv.fit_cv.coefficients.array() != 0.0).count());
    doc["warnings"] = cv.warnings;
    doc["coefficients"] = json::array();
    for (Eigen::Index j = 0; j < cv.fit_cv.coefficients.size(); ++j) {
        doc["coefficients"].push_back({{"name", X.feature_names[static_cast<size_t>(j)]},
                                       {"value", cv.fit_cv.coefficients(j)}});
    }
    std::ofstream out(paths.fit_dir() / "fit.json");
    if (!out) throw DataError("cannot write fit.json");
    out << doc.dump(1) << "\n";
}

void stage_bootstrap(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.bootstrap_dir());

    FeatureMatrix X = load_matrix(paths.analysis_csv().string(), paths.analysis_sidecar().string());
    auto [ids, y] = load_response(paths.analysis_response().string());

    BootstrapOptions opt;
    opt.B = cfg.bootstrap_B;
    opt.k = cfg.k_folds;
    opt.lambda_grid = effective_grid(cfg);
    opt.seed = derive_seed(cfg.seed, hash_label("bootstrap"));
    opt.threads = cfg.threads;
    opt.significance_zero_fraction = cfg.significance_zero_fraction;
    opt.flip_tolerance = cfg.flip_tolerance;

    const BootstrapReport report = bootstrap_lasso(X.values, y, X.feature_names, opt);
    save_bootstrap_report(report, paths.bootstrap_json().string());
    save_stability_csv(stability_report(report, cfg.display_zero_fraction),
                       paths.stability_csv().string());
    if (cfg.dump_samples) {
        save_samples_binary(report.standardized_samples,
                            (paths.bootstrap_dir() / "samples.bin").string());
    }

    if (!cfg.strata_column.empty()) {
        // Strata labels come from the pools table, via the analysis row ids.
        const csv::Table pools = csv::read_file(paths.pools_csv().string());
        const int c_id = pools.require_column("pool_id", "pools.csv");
        const int c_s = pools.require_column(cfg.strata_column, "pools.csv");
        std::map<std::string, std::string> label_of;
        for (const auto& row : pools.rows) {
            label_of[row[static_cast<size_t>(c_id)]] = row[static_cast<size_t>(c_s)];
        }
        std::vector<std::string> strata;
        for (const auto& id : ids) {
            auto it = label_of.find(id);
            if (it == label_of.end()) {
                throw DataError("pipeline: pool '" + id + "' missing from pools.csv");
            }
            strata.push_back(it->second);
        }
        BootstrapOptions sopt = opt;
        sopt.seed = derive_seed(cfg.seed, hash_label("bootstrap-strata"));
        const auto by_stratum = stratified_run(X.values, y, X.feature_names, strata, sopt);
        for (const auto& [label, rep] : by_stratum) {
            const fs::path dir = paths.bootstrap_dir() / ("stratum_" + label);
            fs::create_directories(dir);
            save_bootstrap_report(rep, (dir / "bootstrap.json").string());
            save_stability_csv(stability_report(rep, cfg.display_zero_fraction),
                               (dir / "stability.csv").string());
        }
    }
}

void stage_distfit(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.distfit_dir());

    auto [ids, y] = load_response(paths.response_csv().string());
    std::vector<double> data(y.data(), y.data() + y.size());
    const auto cells = model_scan(data);
    save_scan_csv(cells, (paths.distfit_dir() / "scan.csv").string());

    const ScanCell* best = nullptr;
    for (const auto& c : cells) {
        if (c.fit && (!best || c.fit->ks_p_value > best->fit->ks_p_value)) best = &c;
    }
    if (best) {
        save_fit_json(*best->fit, (paths.distfit_dir() / "best_fit.json").string());
        save_pp_qq_csv(pp_qq_data(data, *best->fit),
                       (paths.distfit_dir() / "ppqq.csv").string());
    }
}

void stage_decompose(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.decompose_dir());
    if (cfg.events_path.empty()) {
        throw ConfigError("pipeline: decompose stage needs an event log");
    }

    const StationTable stations = load_stations(cfg.stations_path);
    const PoolsArtifact pools = build_pools(stations, cfg.pool_merge_radius_m);
    const auto usage_map = usages_by_pool(cfg.events_path, pools);
    std::vector<PoolUsage> usages;
    for (const auto& [id, u] : usage_map) usages.push_back(u);
    save_pool_usage_csv(usages, (paths.decompose_dir() / "pool_usage.csv").string());
    save_simple_models_csv(simple_models(usages),
                           (paths.decompose_dir() / "simple_models.csv").string());

    // Metric comparison against the analysis matrix (rows aligned by id).
    FeatureMatrix X = load_matrix(paths.analysis_csv().string(), paths.analysis_sidecar().string());
    std::vector<PoolUsage> aligned;
    for (const auto& id : X.observation_ids) {
        auto it = usage_map.find(id);
        if (it == usage_map.end()) {
            throw DataError("pipeline: analysis pool '" + id + "' missing from the event log");
        }
        aligned.push_back(it->second);
    }
    save_metric_comparison_csv(response_metric_comparison(aligned, X),
                               (paths.decompose_dir() / "metric_comparison.csv").string());
}

void stage_report(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    const BootstrapReport report = load_bootstrap_report(paths.bootstrap_json().string());
    save_stability_csv(stability_report(report, cfg.display_zero_fraction),
                       paths.stability_csv().string());
}

void stage_sweep(const PipelineConfig& cfg) {
    validate_config(cfg);
    if (cfg.sweep_radii.empty()) return;
    Paths paths(cfg);
    fs::create_directories(paths.sweep_dir());

    auto layers = load_and_patch_layers(cfg, nullptr);
    const StationTable stations = load_stations(cfg.stations_path);
    const PoolsArtifact pools = build_pools(stations, cfg.pool_merge_radius_m);
    const auto usages = usages_by_pool(cfg.events_path, pools);

    std::vector<PoolSite> kept;
    for (const auto& p : pools.pools) {
        if (usages.count(p.id)) kept.push_back(p);
    }
    Eigen::VectorXd y_raw(static_cast<Eigen::Index>(kept.size()));
    for (size_t i = 0; i < kept.size(); ++i) {
        y_raw(static_cast<Eigen::Index>(i)) = metric_value(usages.at(kept[i].id), cfg.response_metric);
    }
    const Eigen::VectorXd y = transform_of(cfg).apply(y_raw);

    const auto feature_config = load_feature_config(cfg.features_config_path);
    const auto entries = radius_sweep(kept, layers, feature_config, y, cfg.sweep_radii);
    std::ofstream out(paths.sweep_dir() / "sweep.csv");
    if (!out) throw DataError("cannot write sweep.csv");
    out << "radius_m,mse,n_rows,n_features,error\n";
    for (const auto& e : entries) {
        out << csv::format_double(e.radius_m) << "," << csv::format_double(e.mse) << ","
            << e.n_rows << "," << e.n_features << "," << csv::quote(e.error) << "\n";
    }
}

void run_pipeline(const PipelineConfig& cfg) {
    validate_config(cfg);
    Paths paths(cfg);
    fs::create_directories(paths.root);
    save_manifest(cfg, paths.manifest().string());

    struct StageDef {
        const char* name;
        void (*fn)(const PipelineConfig&);
        bool enabled;
    };
    const bool have_events = !cfg.events_path.empty();
    const StageDef stages[] = {
        {"extract", stage_extract, true},
        {"preprocess", stage_preprocess, true},
        {"fit", stage_fit, true},
        {"bootstrap", stage_bootstrap, true},
        {"distfit", stage_distfit, true},
        {"decompose", stage_decompose, have_events},
        {"report", stage_report, true},
        {"sweep", stage_sweep, !cfg.sweep_radii.empty() && have_events},
    };
    for (const auto& s : stages) {
        if (!s.enabled) continue;
        try {
            s.fn(cfg);
        } catch (const Error& e) {
            std::ofstream out(paths.root / "error.json");
            out << error_report(s.name, e).dump(1) << "\n";
            throw;
        }
    }
}

}  // namespace poolsight

#include "poolsight/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "poolsight/csv.hpp"
#include "poolsight/rng.hpp"

namespace poolsight {

using nlohmann::json;

void SynthConfig::validate() const {
    if (n_pools < 1) throw ConfigError("synth: n_pools must be >= 1");
    if (n_features < 1) throw ConfigError("synth: n_features must be >= 1");
    if (!true_support.empty() && static_cast<int>(true_support.size()) != n_features) {
        throw ConfigError("synth: true_support length must equal n_features");
    }
    if (noise_sd < 0.0) throw ConfigError("synth: noise_sd must be >= 0");
    if (!(extent_m > 0.0) || !(tile_m > 0.0) || !(radius_m > 0.0)) {
        throw ConfigError("synth: extent, tile and radius must be positive");
    }
    if (extent_m <= 2.0 * radius_m) {
        throw ConfigError("synth: extent must exceed twice the buffer radius");
    }
    if (!(mean_charging_h > 0.0) || !(mean_power_kw > 0.0)) {
        throw ConfigError("synth: event parameters must be positive");
    }
    if (event_jitter < 0.0 || event_jitter >= 1.0) {
        throw ConfigError("synth: event_jitter must be in [0,1)");
    }
    if (attr_correlation < 0.0 || attr_correlation > 1.0) {
        throw ConfigError("synth: attr_correlation must be in [0,1]");
    }
    const long long tiles = static_cast<long long>(std::ceil(extent_m / tile_m));
    if (tiles * tiles > 1'000'000) throw ConfigError("synth: tiling too fine");
}

SynthConfig load_synth_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synth config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": JSON parse error: " + std::string(e.what()));
    }
    SynthConfig cfg;
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.n_pools = doc.value("n_pools", cfg.n_pools);
    cfg.n_features = doc.value("n_features", cfg.n_features);
    if (doc.contains("true_support")) {
        cfg.true_support = doc["true_support"].get<std::vector<double>>();
    }
    cfg.intercept = doc.value("intercept", cfg.intercept);
    cfg.noise_sd = doc.value("noise_sd", cfg.noise_sd);
    cfg.extent_m = doc.value("extent_m", cfg.extent_m);
    cfg.tile_m = doc.value("tile_m", cfg.tile_m);
    cfg.radius_m = doc.value("radius_m", cfg.radius_m);
    cfg.min_separation_m = doc.value("min_separation_m", cfg.min_separation_m);
    cfg.attr_correlation = doc.value("attr_correlation", cfg.attr_correlation);
    cfg.poi_per_km2 = doc.value("poi_per_km2", cfg.poi_per_km2);
    cfg.road_spacing_m = doc.value("road_spacing_m", cfg.road_spacing_m);
    cfg.mean_charging_h = doc.value("mean_charging_h", cfg.mean_charging_h);
    cfg.mean_power_kw = doc.value("mean_power_kw", cfg.mean_power_kw);
    cfg.event_jitter = doc.value("event_jitter", cfg.event_jitter);
    cfg.validate();
    return cfg;
}

namespace {

std::string attr_name(int j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "a%03d", j);
    return buf;
}

// Pool ids follow the pipeline convention "p<representative station id>";
// with one station per pool the ids line up one to one.
std::string pool_name(int i) { return "p" + std::to_string(i); }

}  // namespace

SynthWorld generate_world(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    SynthWorld world;
    world.true_support = cfg.true_support.empty()
                             ? std::vector<double>(static_cast<size_t>(cfg.n_features), 0.0)
                             : cfg.true_support;

    // Square tiling with n_features uniform attributes per tile.
    const int n_side = static_cast<int>(std::ceil(cfg.extent_m / cfg.tile_m));
    SpatialLayer tiles;
    tiles.name = "tiles";
    tiles.kind = GeometryKind::Polygons;
    std::vector<NumericAttribute> attrs(static_cast<size_t>(cfg.n_features));
    for (auto& a : attrs) {
        a.values.reserve(static_cast<size_t>(n_side) * n_side);
        a.missing.assign(static_cast<size_t>(n_side) * n_side, false);
    }
    for (int gy = 0; gy < n_side; ++gy) {
        for (int gx = 0; gx < n_side; ++gx) {
            const double x0 = gx * cfg.tile_m, y0 = gy * cfg.tile_m;
            const double x1 = x0 + cfg.tile_m, y1 = y0 + cfg.tile_m;
            tiles.polygons.push_back(
                {Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}}});
            const double latent = rng.uniform();
            for (int j = 0; j < cfg.n_features; ++j) {
                attrs[static_cast<size_t>(j)].values.push_back(
                    cfg.attr_correlation * latent + (1.0 - cfg.attr_correlation) * rng.uniform());
            }
        }
    }
    for (int j = 0; j < cfg.n_features; ++j) {
        tiles.numeric[attr_name(j)] = std::move(attrs[static_cast<size_t>(j)]);
    }
    world.layers["tiles"] = std::move(tiles);

    for (int j = 0; j < cfg.n_features; ++j) {
        world.feature_config.push_back(
            {"tiles", attr_name(j), AttributeKind::Count, {}, {}, "", {}});
    }

    // Pools stay a buffer radius away from the tiling edge, so every buffer
    // is fully covered and extraction yields a complete matrix. A minimum
    // separation keeps the 50 m station merge from collapsing pools.
    const double tiled_extent = n_side * cfg.tile_m;
    const double margin = cfg.radius_m * 1.01;
    for (int i = 0; i < cfg.n_pools; ++i) {
        Point loc;
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            loc = {rng.uniform(margin, tiled_extent - margin),
                   rng.uniform(margin, tiled_extent - margin)};
            placed = true;
            for (const auto& p : world.pools) {
                if (distance(p.location, loc) < cfg.min_separation_m) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed) {
            throw ConfigError("synth: cannot place " + std::to_string(cfg.n_pools) +
                              " pools at the requested separation; enlarge the extent");
        }
        world.pools.push_back({pool_name(i), loc});
        world.stations.push_back({i, loc});
        world.rollout.push_back(rng.uniform() < 0.5 ? "strategic" : "demand");
    }

    if (cfg.poi_per_km2 > 0.0) {
        SpatialLayer pois;
        pois.name = "pois";
        pois.kind = GeometryKind::Points;
        const double area_km2 = tiled_extent * tiled_extent / 1e6;
        const int n_pois = std::max(1, static_cast<int>(std::llround(cfg.poi_per_km2 * area_km2)));
        const char* categories[3] = {"food", "health", "hobby"};
        std::vector<std::string> cat;
        for (int i = 0; i < n_pois; ++i) {
            pois.points.push_back({rng.uniform(0, tiled_extent), rng.uniform(0, tiled_extent)});
            cat.push_back(categories[rng.uniform_index(3)]);
        }
        pois.categorical["type"] = std::move(cat);
        world.layers["pois"] = std::move(pois);
        world.feature_config.push_back({"pois", "type", AttributeKind::PointSet, {}, {}, "", {}});
    }

    if (cfg.road_spacing_m > 0.0) {
        SpatialLayer roads;
        roads.name = "roads";
        roads.kind = GeometryKind::Polylines;
        std::vector<double> tf1, tf2, tf3;
        std::vector<std::string> type;
        const char* types[4] = {"residential", "primary", "secondary", "tertiary"};
        for (double c = cfg.road_spacing_m; c < tiled_extent; c += cfg.road_spacing_m) {
            roads.polylines.push_back(Polyline{{{0.0, c}, {tiled_extent, c}}});
            roads.polylines.push_back(Polyline{{{c, 0.0}, {c, tiled_extent}}});
            for (int rep = 0; rep < 2; ++rep) {
                tf1.push_back(std::floor(rng.uniform(50, 800)));
                tf2.push_back(std::floor(rng.uniform(10, 200)));
                tf3.push_back(std::floor(rng.uniform(5, 100)));
                type.push_back(types[rng.uniform_index(4)]);
            }
        }
        const size_t n_seg = roads.polylines.size();
        roads.numeric["TF1"] = {tf1, std::vector<bool>(n_seg, false)};
        roads.numeric["TF2"] = {tf2, std::vector<bool>(n_seg, false)};
        roads.numeric["TF3"] = {tf3, std::vector<bool>(n_seg, false)};
        roads.categorical["segment_type"] = std::move(type);
        world.layers["roads"] = std::move(roads);
        FeatureConfigEntry road_cfg;
        road_cfg.layer = "roads";
        road_cfg.kind = AttributeKind::Flow;
        road_cfg.modes = {{"cars", {"TF1"}}, {"buses", {"TF2"}}, {"trucks", {"TF3"}}};
        road_cfg.type_attribute = "segment_type";
        road_cfg.types = {"primary", "secondary", "tertiary"};
        world.feature_config.push_back(std::move(road_cfg));
    }

    // Extract the design matrix with the production extractor; the planted
    // model lives on exactly these columns.
    ExtractionSettings settings;
    settings.radius_m = cfg.radius_m;
    Assembled assembled = assemble_matrix(world.pools, world.layers, world.feature_config, settings);
    world.features = std::move(assembled.matrix);
    if (!assembled.report.dropped.empty()) {
        throw NumericError("synth: extraction dropped " +
                           std::to_string(assembled.report.dropped.size()) +
                           " features on a fully covered world");
    }

    // Planted response in log-energy space.
    const Eigen::Index n = world.features.n_rows();
    world.log_energy.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = cfg.intercept;
        for (int j = 0; j < cfg.n_features; ++j) {
            v += world.true_support[static_cast<size_t>(j)] * world.features.values(i, j);
        }
        world.log_energy(i) = v + rng.normal(0.0, cfg.noise_sd);
    }
    world.energy = world.log_energy.array().exp();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(world.energy(i)) || !(world.energy(i) > 0.0)) {
            throw ConfigError("synth: planted energy is not positive and finite (pool " +
                              std::to_string(i) + ")");
        }
    }

    // Event log whose aggregation reproduces the planted energies exactly:
    // per-event energies are shares of y_i, charging hours follow from a
    // per-event power draw.
    long long total_events = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = world.energy(i);
        const int n_events = std::max(
            1, static_cast<int>(std::llround(y / (cfg.mean_charging_h * cfg.mean_power_kw))));
        total_events += n_events;
        if (total_events > 5'000'000) {
            throw ConfigError("synth: event volume infeasible; lower the intercept");
        }
        std::vector<double> w(static_cast<size_t>(n_events));
        double wsum = 0.0;
        for (auto& v : w) {
            v = rng.uniform(1.0 - cfg.event_jitter, 1.0 + cfg.event_jitter);
            wsum += v;
        }
        const int n_points = 1 + static_cast<int>(rng.uniform_index(2));
        for (int e = 0; e < n_events; ++e) {
            ChargingEvent ev;
            ev.pool_id = world.pools[static_cast<size_t>(i)].id;
            ev.point_id = ev.pool_id + "-" + std::to_string(e % n_points + 1);
            ev.energy_kwh = y * w[static_cast<size_t>(e)] / wsum;
            const double power =
                cfg.mean_power_kw * rng.uniform(1.0 - cfg.event_jitter, 1.0 + cfg.event_jitter);
            ev.charging_h = ev.energy_kwh / power;
            ev.idle_h = rng.uniform(0.0, 2.0);
            ev.connection_h = ev.charging_h + ev.idle_h;
            ev.rfid_count = 1;
            ev.start_time = "2015-D" + std::to_string(e);
            ev.end_time = "2015-D" + std::to_string(e + 1);
            world.events.push_back(std::move(ev));
        }
    }
    return world;
}

void save_world(const SynthWorld& world, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& [name, layer] : world.layers) {
        save_geojson(layer, (fs::path(dir) / (name + ".geojson")).string());
    }
    {
        std::ofstream out(fs::path(dir) / "stations.csv");
        if (!out) throw DataError("cannot write stations.csv");
        out << "station_id,x,y,rollout\n";
        for (size_t i = 0; i < world.stations.size(); ++i) {
            out << world.stations[i].id << "," << csv::format_double(world.stations[i].position.x)
                << "," << csv::format_double(world.stations[i].position.y) << ","
                << world.rollout[i] << "\n";
        }
    }
    save_events_csv(world.events, (fs::path(dir) / "events.csv").string());
    save_feature_config(world.feature_config, (fs::path(dir) / "features_config.json").string());

    json truth;
    truth["seed_note"] = "see synth config; truth lists the planted model";
    truth["true_support"] = world.true_support;
    truth["feature_names"] = world.features.feature_names;
    truth["pool_ids"] = json::array();
    truth["log_energy"] = json::array();
    for (Eigen::Index i = 0; i < world.log_energy.size(); ++i) {
        truth["pool_ids"].push_back(world.pools[static_cast<size_t>(i)].id);
        truth["log_energy"].push_back(world.log_energy(i));
    }
    std::ofstream out(fs::path(dir) / "truth.json");
    if (!out) throw DataError("cannot write truth.json");
    out << truth.dump(1) << "\n";
}

}  // namespace poolsight

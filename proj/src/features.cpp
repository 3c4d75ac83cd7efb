#include "poolsight/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "poolsight/regression.hpp"

namespace poolsight {

using nlohmann::json;

AttributeKind attribute_kind_from_string(const std::string& s) {
    if (s == "count") return AttributeKind::Count;
    if (s == "average") return AttributeKind::Average;
    if (s == "percentage") return AttributeKind::Percentage;
    if (s == "category-area") return AttributeKind::CategoryArea;
    if (s == "point-set") return AttributeKind::PointSet;
    if (s == "flow") return AttributeKind::Flow;
    throw ConfigError("unknown attribute kind '" + s + "'");
}

std::string to_string(AttributeKind k) {
    switch (k) {
    case AttributeKind::Count: return "count";
    case AttributeKind::Average: return "average";
    case AttributeKind::Percentage: return "percentage";
    case AttributeKind::CategoryArea: return "category-area";
    case AttributeKind::PointSet: return "point-set";
    case AttributeKind::Flow: return "flow";
    }
    return "?";
}

namespace {

struct ClippedRecord {
    uint32_t record = 0;
    double area = 0.0;  // intersection area with the buffer
};

// Intersection areas of all polygon records overlapping the buffer.
std::vector<ClippedRecord> clip_polygon_layer(const Buffer& buffer, const SpatialLayer& layer,
                                              const GridIndex* index) {
    if (layer.kind != GeometryKind::Polygons) {
        throw DataError("layer '" + layer.name + "' is not a polygon layer");
    }
    const BoundingBox query = bounding_box(buffer);
    std::vector<uint32_t> cands;
    if (index) {
        cands = index->candidates(query);
    } else {
        cands.resize(layer.polygons.size());
        for (uint32_t i = 0; i < cands.size(); ++i) cands[i] = i;
    }
    std::vector<ClippedRecord> out;
    for (uint32_t r : cands) {
        double a = 0.0;
        for (const Polygon& part : layer.polygons[r]) {
            a += intersection_area(part, buffer);
        }
        if (a > 0.0) out.push_back({r, a});
    }
    return out;
}

double record_total_area(const SpatialLayer& layer, uint32_t r,
                         std::vector<double>& cache) {
    if (cache.empty()) cache.assign(layer.polygons.size(), -1.0);
    if (cache[r] < 0.0) cache[r] = record_area(layer.polygons[r]);
    return cache[r];
}

ApportionResult apportion_from_clips(const std::vector<ClippedRecord>& clips,
                                     const SpatialLayer& layer, const NumericAttribute& attr,
                                     const Buffer& buffer, bool extensive,
                                     std::vector<double>& area_cache) {
    const double buf_area = buffer.area();
    double covered_valid = 0.0;
    double acc = 0.0;
    double weight = 0.0;
    for (const ClippedRecord& c : clips) {
        if (attr.missing[c.record]) continue;
        covered_valid += c.area;
        if (extensive) {
            const double total = record_total_area(layer, c.record, area_cache);
            if (total > 0.0) acc += attr.values[c.record] * (c.area / total);
        } else {
            acc += attr.values[c.record] * c.area;
            weight += c.area;
        }
    }
    ApportionResult res;
    res.missing_coverage = std::clamp(1.0 - covered_valid / buf_area, 0.0, 1.0);
    if (extensive) {
        res.value = acc;  // nothing intersecting -> 0 with full coverage gap
    } else if (weight > 0.0) {
        res.value = acc / weight;
    }
    return res;
}

}  // namespace

ApportionResult apportion_count(const Buffer& buffer, const SpatialLayer& layer,
                                const std::string& attr, const GridIndex* index) {
    const NumericAttribute& a = layer.numeric_attr(attr);
    std::vector<double> cache;
    return apportion_from_clips(clip_polygon_layer(buffer, layer, index), layer, a, buffer,
                                /*extensive=*/true, cache);
}

ApportionResult areal_mean(const Buffer& buffer, const SpatialLayer& layer,
                           const std::string& attr, const GridIndex* index) {
    const NumericAttribute& a = layer.numeric_attr(attr);
    std::vector<double> cache;
    return apportion_from_clips(clip_polygon_layer(buffer, layer, index), layer, a, buffer,
                                /*extensive=*/false, cache);
}

PoiFeatures poi_features(const Point& pool, const Buffer& buffer, const SpatialLayer& pois,
                         const std::string& category_attr, const std::string& category,
                         const std::map<std::string, std::string>* category_map) {
    if (pois.kind != GeometryKind::Points) {
        throw DataError("layer '" + pois.name + "' is not a point layer");
    }
    const std::vector<std::string>* cats =
        category_attr.empty() ? nullptr : &pois.categorical_attr(category_attr);

    auto matches = [&](uint32_t i) {
        if (!cats) return true;
        const std::string& raw = (*cats)[i];
        if (raw.empty()) return false;
        if (category_map) {
            auto it = category_map->find(raw);
            return it != category_map->end() && it->second == category;
        }
        return raw == category;
    };

    PoiFeatures out;
    double best2 = std::numeric_limits<double>::infinity();
    size_t inside = 0;
    for (uint32_t i = 0; i < pois.points.size(); ++i) {
        if (!matches(i)) continue;
        const double dx = pois.points[i].x - pool.x;
        const double dy = pois.points[i].y - pool.y;
        best2 = std::min(best2, dx * dx + dy * dy);
        if (buffer.contains(pois.points[i])) ++inside;
    }
    if (std::isfinite(best2)) out.min_dist_m = std::sqrt(best2);
    out.density_per_km2 = static_cast<double>(inside) / (buffer.area() / 1e6);
    return out;
}

std::map<std::string, double> land_use_areas(const Buffer& buffer, const SpatialLayer& layer,
                                             const std::string& category_attr,
                                             const GridIndex* index) {
    const std::vector<std::string>& cats = layer.categorical_attr(category_attr);
    std::map<std::string, double> out;
    for (const ClippedRecord& c : clip_polygon_layer(buffer, layer, index)) {
        const std::string& cat = cats[c.record];
        if (cat.empty()) continue;
        out[cat] += c.area;
    }
    return out;
}

RoadTrafficFeatures road_traffic_features(const Point& pool, const Buffer& buffer,
                                          const SpatialLayer& roads,
                                          const std::map<std::string, std::vector<std::string>>& modes,
                                          const std::string& type_attr) {
    if (roads.kind != GeometryKind::Polylines) {
        throw DataError("layer '" + roads.name + "' is not a polyline layer");
    }
    RoadTrafficFeatures out;
    const double buf_area = buffer.area();
    for (const auto& [mode, attrs] : modes) {
        if (mode == "all") throw ConfigError("road mode name 'all' is reserved");
        out.traffic_density[mode] = 0.0;
        out.nearest_flow[mode] = std::nullopt;
        for (const auto& a : attrs) roads.numeric_attr(a);  // schema check
    }
    out.traffic_density["all"] = 0.0;

    double total_len = 0.0;
    double nearest_dist = std::numeric_limits<double>::infinity();
    uint32_t nearest_record = 0;
    bool have_nearest = false;

    for (uint32_t r = 0; r < roads.polylines.size(); ++r) {
        const double len = polyline_length_in(roads.polylines[r], buffer);
        if (len > 0.0) {
            total_len += len;
            for (const auto& [mode, attrs] : modes) {
                double flow = 0.0;
                bool missing = false;
                for (const auto& a : attrs) {
                    const NumericAttribute& attr = roads.numeric_attr(a);
                    if (attr.missing[r]) { missing = true; break; }
                    flow += attr.values[r];
                }
                if (!missing) {
                    out.traffic_density[mode] += len * flow / buf_area;
                    out.traffic_density["all"] += len * flow / buf_area;
                }
            }
        }
        const double d = point_polyline_distance(pool, roads.polylines[r]);
        if (d < nearest_dist) {
            nearest_dist = d;
            nearest_record = r;
            have_nearest = true;
        }
    }
    out.road_density = total_len / buf_area;

    if (have_nearest) {
        for (const auto& [mode, attrs] : modes) {
            double flow = 0.0;
            bool missing = false;
            for (const auto& a : attrs) {
                const NumericAttribute& attr = roads.numeric_attr(a);
                if (attr.missing[nearest_record]) { missing = true; break; }
                flow += attr.values[nearest_record];
            }
            if (!missing) out.nearest_flow[mode] = flow;
        }
        if (!type_attr.empty()) {
            const auto& types = roads.categorical_attr(type_attr);
            if (!types[nearest_record].empty()) out.nearest_type = types[nearest_record];
        }
    }
    return out;
}

std::vector<FeatureConfigEntry> load_feature_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open feature config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": JSON parse error: " + std::string(e.what()));
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        throw ConfigError(path + ": expected a top-level 'features' array");
    }
    std::vector<FeatureConfigEntry> out;
    for (const auto& f : doc["features"]) {
        FeatureConfigEntry e;
        e.layer = f.value("layer", "");
        if (e.layer.empty()) throw ConfigError(path + ": feature entry without 'layer'");
        e.kind = attribute_kind_from_string(f.value("kind", ""));
        e.attribute = f.value("attribute", "");
        if (e.attribute.empty() && (e.kind == AttributeKind::Count ||
                                    e.kind == AttributeKind::Average ||
                                    e.kind == AttributeKind::Percentage ||
                                    e.kind == AttributeKind::CategoryArea)) {
            throw ConfigError(path + ": kind '" + to_string(e.kind) + "' requires 'attribute'");
        }
        if (f.contains("category_map")) {
            for (const auto& [k, v] : f["category_map"].items()) {
                e.category_map[k] = v.get<std::string>();
            }
        }
        if (f.contains("modes")) {
            for (const auto& [k, v] : f["modes"].items()) {
                e.modes[k] = v.get<std::vector<std::string>>();
            }
        }
        e.type_attribute = f.value("type_attribute", "");
        if (f.contains("types")) e.types = f["types"].get<std::vector<std::string>>();
        if (e.kind == AttributeKind::Flow && e.modes.empty()) {
            throw ConfigError(path + ": flow feature requires 'modes'");
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) throw ConfigError(path + ": no feature entries");
    return out;
}

void save_feature_config(const std::vector<FeatureConfigEntry>& entries, const std::string& path) {
    json doc;
    doc["features"] = json::array();
    for (const auto& e : entries) {
        json f;
        f["layer"] = e.layer;
        f["kind"] = to_string(e.kind);
        if (!e.attribute.empty()) f["attribute"] = e.attribute;
        if (!e.category_map.empty()) f["category_map"] = e.category_map;
        if (!e.modes.empty()) f["modes"] = e.modes;
        if (!e.type_attribute.empty()) f["type_attribute"] = e.type_attribute;
        if (!e.types.empty()) f["types"] = e.types;
        doc["features"].push_back(std::move(f));
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write feature config: " + path);
    out << doc.dump(1) << "\n";
}

namespace {

const SpatialLayer& layer_or_throw(const std::map<std::string, SpatialLayer>& layers,
                                   const std::string& name) {
    auto it = layers.find(name);
    if (it == layers.end()) throw ConfigError("feature config references unknown layer '" + name + "'");
    return it->second;
}

// Distinct non-missing categories, in sorted order, for stable column naming.
std::vector<std::string> distinct_categories(const std::vector<std::string>& values) {
    std::set<std::string> s;
    for (const auto& v : values) {
        if (!v.empty()) s.insert(v);
    }
    return {s.begin(), s.end()};
}

std::vector<std::string> mapped_categories(const std::vector<std::string>& values,
                                           const std::map<std::string, std::string>& category_map) {
    if (category_map.empty()) return distinct_categories(values);
    std::set<std::string> s;
    for (const auto& [raw, mapped] : category_map) s.insert(mapped);
    return {s.begin(), s.end()};
}

struct ColumnPlan {
    std::string name;
    std::string provenance;
    bool has_coverage = false;  // polygon-derived columns carry a coverage gap
};

}  // namespace

RawExtraction extract_raw(const std::vector<PoolSite>& pools,
                          const std::map<std::string, SpatialLayer>& layers,
                          const std::vector<FeatureConfigEntry>& features, double radius_m) {
    if (pools.empty()) throw DataError("extract_raw: no pools");
    if (!(radius_m > 0.0)) throw ConfigError("extract_raw: radius must be positive");

    const Eigen::Index n = static_cast<Eigen::Index>(pools.size());

    // Plan all output columns first so the matrix can be sized up front.
    struct BoundEntry {
        const FeatureConfigEntry* cfg;
        const SpatialLayer* layer;
        std::vector<std::string> categories;  // CategoryArea / PointSet
        int first_col = 0;
        int n_cols = 0;
    };
    std::vector<BoundEntry> bound;
    std::vector<ColumnPlan> plan;
    for (const auto& cfg : features) {
        const SpatialLayer& layer = layer_or_throw(layers, cfg.layer);
        BoundEntry be{&cfg, &layer, {}, static_cast<int>(plan.size()), 0};
        const std::string prov = cfg.layer + ":" + to_string(cfg.kind) +
                                 (cfg.attribute.empty() ? "" : ":" + cfg.attribute);
        switch (cfg.kind) {
        case AttributeKind::Count:
        case AttributeKind::Average:
        case AttributeKind::Percentage:
            layer.numeric_attr(cfg.attribute);  // schema check
            plan.push_back({cfg.layer + "." + cfg.attribute, prov, true});
            break;
        case AttributeKind::CategoryArea: {
            be.categories = distinct_categories(layer.categorical_attr(cfg.attribute));
            for (const auto& c : be.categories) {
                plan.push_back({cfg.layer + ".area." + c, prov + ":" + c, true});
            }
            break;
        }
        case AttributeKind::PointSet: {
            if (!cfg.attribute.empty()) {
                be.categories = mapped_categories(layer.categorical_attr(cfg.attribute),
                                                  cfg.category_map);
            } else {
                be.categories = {""};
            }
            for (const auto& c : be.categories) {
                const std::string base = cfg.layer + (c.empty() ? "" : "." + c);
                plan.push_back({base + ".min_dist", prov + ":" + c, false});
                plan.push_back({base + ".density", prov + ":" + c, false});
            }
            break;
        }
        case AttributeKind::Flow: {
            plan.push_back({cfg.layer + ".road_density", prov, false});
            for (const auto& [mode, attrs] : cfg.modes) {
                (void)attrs;
                plan.push_back({cfg.layer + ".traffic_density." + mode, prov, false});
            }
            plan.push_back({cfg.layer + ".traffic_density.all", prov, false});
            for (const auto& [mode, attrs] : cfg.modes) {
                (void)attrs;
                plan.push_back({cfg.layer + ".nearest_flow." + mode, prov, false});
            }
            for (const auto& t : cfg.types) {
                plan.push_back({cfg.layer + ".nearest_type." + t, prov, false});
            }
            break;
        }
        }
        be.n_cols = static_cast<int>(plan.size()) - be.first_col;
        bound.push_back(std::move(be));
    }

    const Eigen::Index p = static_cast<Eigen::Index>(plan.size());
    if (p == 0) throw ConfigError("feature config yields no columns");

    RawExtraction out;
    out.matrix.values = Eigen::MatrixXd::Zero(n, p);
    out.matrix.missing.assign(static_cast<size_t>(n) * static_cast<size_t>(p), 0);
    out.coverage_gap = Eigen::MatrixXd::Zero(n, p);
    for (const auto& c : plan) {
        out.matrix.feature_names.push_back(c.name);
        out.matrix.provenance.push_back(c.provenance);
    }
    for (const auto& pool : pools) out.matrix.observation_ids.push_back(pool.id);

    // Spatial indexes and polygon area caches, one per layer actually used.
    std::map<const SpatialLayer*, GridIndex> indexes;
    std::map<const SpatialLayer*, std::vector<double>> area_caches;
    for (const auto& be : bound) {
        if (be.layer->kind != GeometryKind::Points && indexes.find(be.layer) == indexes.end()) {
            indexes.emplace(be.layer, build_index(*be.layer, 2.0 * radius_m));
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const Buffer buffer(pools[static_cast<size_t>(i)].location, radius_m);
        // Clip each polygon layer once per pool; reuse across its features.
        std::map<const SpatialLayer*, std::vector<ClippedRecord>> clips;
        for (const auto& be : bound) {
            if (be.layer->kind == GeometryKind::Polygons && clips.find(be.layer) == clips.end()) {
                clips[be.layer] = clip_polygon_layer(buffer, *be.layer, &indexes.at(be.layer));
            }
        }

        for (const auto& be : bound) {
            const FeatureConfigEntry& cfg = *be.cfg;
            int col = be.first_col;
            switch (cfg.kind) {
            case AttributeKind::Count:
            case AttributeKind::Average:
            case AttributeKind::Percentage: {
                const bool extensive = cfg.kind == AttributeKind::Count;
                const ApportionResult r = apportion_from_clips(
                    clips.at(be.layer), *be.layer, be.layer->numeric_attr(cfg.attribute), buffer,
                    extensive, area_caches[be.layer]);
                if (r.value) out.matrix.values(i, col) = *r.value;
                else out.matrix.set_missing(i, col, true);
                out.coverage_gap(i, col) = r.missing_coverage;
                break;
            }
            case AttributeKind::CategoryArea: {
                const auto& cats = be.layer->categorical_attr(cfg.attribute);
                const double buf_area = buffer.area();
                double covered = 0.0;
                std::map<std::string, double> areas;
                for (const ClippedRecord& c : clips.at(be.layer)) {
                    if (cats[c.record].empty()) continue;
                    areas[cats[c.record]] += c.area;
                    covered += c.area;
                }
                const double gap = std::clamp(1.0 - covered / buf_area, 0.0, 1.0);
                for (size_t k = 0; k < be.categories.size(); ++k) {
                    auto it = areas.find(be.categories[k]);
                    out.matrix.values(i, col + static_cast<int>(k)) =
                        it == areas.end() ? 0.0 : it->second;
                    out.coverage_gap(i, col + static_cast<int>(k)) = gap;
                }
                break;
            }
            case AttributeKind::PointSet: {
                for (size_t k = 0; k < be.categories.size(); ++k) {
                    const PoiFeatures f = poi_features(
                        pools[static_cast<size_t>(i)].location, buffer, *be.layer, cfg.attribute,
                        be.categories[k], cfg.category_map.empty() ? nullptr : &cfg.category_map);
                    const int c0 = col + static_cast<int>(2 * k);
                    if (f.min_dist_m) out.matrix.values(i, c0) = *f.min_dist_m;
                    else out.matrix.set_missing(i, c0, true);
                    out.matrix.values(i, c0 + 1) = f.density_per_km2;
                }
                break;
            }
            case AttributeKind::Flow: {
                const RoadTrafficFeatures f =
                    road_traffic_features(pools[static_cast<size_t>(i)].location, buffer, *be.layer,
                                          cfg.modes, cfg.type_attribute);
                out.matrix.values(i, col) = f.road_density;
                ++col;
                for (const auto& [mode, td] : f.traffic_density) {
                    if (mode == "all") continue;
                    out.matrix.values(i, col) = td;
                    ++col;
                }
                out.matrix.values(i, col) = f.traffic_density.at("all");
                ++col;
                for (const auto& [mode, flow] : f.nearest_flow) {
                    if (flow) out.matrix.values(i, col) = *flow;
                    else out.matrix.set_missing(i, col, true);
                    ++col;
                }
                for (const auto& t : cfg.types) {
                    if (f.nearest_type) {
                        out.matrix.values(i, col) = (*f.nearest_type == t) ? 1.0 : 0.0;
                    } else {
                        out.matrix.set_missing(i, col, true);
                    }
                    ++col;
                }
                break;
            }
            }
        }
    }
    return out;
}

Assembled assemble_matrix(const std::vector<PoolSite>& pools,
                          const std::map<std::string, SpatialLayer>& layers,
                          const std::vector<FeatureConfigEntry>& features,
                          const ExtractionSettings& settings) {
    RawExtraction raw = extract_raw(pools, layers, features, settings.radius_m);
    const Eigen::Index n = raw.matrix.n_rows();
    const Eigen::Index p = raw.matrix.n_cols();

    Assembled out;
    std::vector<int> kept;
    for (Eigen::Index j = 0; j < p; ++j) {
        const std::string& name = raw.matrix.feature_names[static_cast<size_t>(j)];
        const double worst_gap = raw.coverage_gap.col(j).maxCoeff();
        if (worst_gap > settings.coverage_threshold) {
            out.report.dropped.push_back(
                {name, "coverage gap " + std::to_string(worst_gap) + " exceeds threshold in at least one buffer"});
            continue;
        }
        Eigen::Index n_missing = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (raw.matrix.is_missing(i, j)) ++n_missing;
        }
        if (n_missing == n) {
            out.report.dropped.push_back({name, "no value computable for any pool"});
            continue;
        }
        const double frac = static_cast<double>(n_missing) / static_cast<double>(n);
        if (frac >= settings.imputation_threshold && n_missing > 0) {
            out.report.dropped.push_back(
                {name, "missing in " + std::to_string(n_missing) + " of " + std::to_string(n) +
                           " pools (at or above imputation threshold)"});
            continue;
        }
        kept.push_back(static_cast<int>(j));
    }
    if (kept.empty()) throw DataError("assemble_matrix: every feature was dropped");

    out.matrix = raw.matrix.select_columns(kept);
    const Eigen::Index pk = out.matrix.n_cols();
    for (Eigen::Index j = 0; j < pk; ++j) {
        std::vector<double> present;
        std::vector<Eigen::Index> holes;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (out.matrix.is_missing(i, j)) holes.push_back(i);
            else present.push_back(out.matrix.values(i, j));
        }
        if (holes.empty()) continue;
        std::sort(present.begin(), present.end());
        const size_t m = present.size();
        const double median = (m % 2 == 1) ? present[m / 2]
                                           : 0.5 * (present[m / 2 - 1] + present[m / 2]);
        for (Eigen::Index i : holes) {
            out.matrix.values(i, j) = median;
            out.matrix.set_missing(i, j, false);
        }
        out.matrix.provenance[static_cast<size_t>(j)] += "+median_imputed";
        out.report.imputed.push_back({out.matrix.feature_names[static_cast<size_t>(j)],
                                      static_cast<int>(holes.size()), median});
    }
    out.matrix.missing.clear();
    out.matrix.validate();
    return out;
}

std::vector<RadiusSweepEntry> radius_sweep(const std::vector<PoolSite>& pools,
                                           const std::map<std::string, SpatialLayer>& layers,
                                           const std::vector<FeatureConfigEntry>& features,
                                           const Eigen::VectorXd& y,
                                           const std::vector<double>& radii) {
    if (radii.empty()) throw ConfigError("radius_sweep: empty radius list");
    if (static_cast<Eigen::Index>(pools.size()) != y.size()) {
        throw DataError("radius_sweep: response length does not match pool count");
    }
    const double r_min = *std::min_element(radii.begin(), radii.end());

    // Rows that are complete at the smallest radius form the common
    // observation set; smaller buffers are the ones that can miss data.
    RawExtraction base = extract_raw(pools, layers, features, r_min);
    std::vector<int> common_rows;
    for (Eigen::Index i = 0; i < base.matrix.n_rows(); ++i) {
        bool complete = true;
        for (Eigen::Index j = 0; j < base.matrix.n_cols() && complete; ++j) {
            if (base.matrix.is_missing(i, j)) complete = false;
        }
        if (complete) common_rows.push_back(static_cast<int>(i));
    }

    std::vector<RadiusSweepEntry> out;
    for (double r : radii) {
        RadiusSweepEntry entry;
        entry.radius_m = r;
        try {
            RawExtraction ex = extract_raw(pools, layers, features, r);
            // Features must be complete on the common rows to enter the OLS.
            std::vector<int> cols;
            for (Eigen::Index j = 0; j < ex.matrix.n_cols(); ++j) {
                bool complete = true;
                for (int i : common_rows) {
                    if (ex.matrix.is_missing(i, j)) { complete = false; break; }
                }
                if (complete) cols.push_back(static_cast<int>(j));
            }
            FeatureMatrix sub = ex.matrix.select_columns(cols).select_rows(common_rows);
            Eigen::VectorXd ysub(static_cast<Eigen::Index>(common_rows.size()));
            for (size_t i = 0; i < common_rows.size(); ++i) {
                ysub(static_cast<Eigen::Index>(i)) = y(common_rows[i]);
            }
            entry.n_rows = static_cast<int>(common_rows.size());
            entry.n_features = static_cast<int>(cols.size());
            const OlsFit fit = ols_fit(sub.values, ysub);
            entry.mse = fit.mse;
        } catch (const Error& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

void save_extraction_report(const ExtractionReport& report, const std::string& path) {
    json doc;
    doc["dropped"] = json::array();
    for (const auto& d : report.dropped) {
        doc["dropped"].push_back({{"name", d.name}, {"reason", d.reason}});
    }
    doc["imputed"] = json::array();
    for (const auto& im : report.imputed) {
        doc["imputed"].push_back(
            {{"name", im.name}, {"n_imputed", im.n_imputed}, {"median", im.median}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write extraction report: " + path);
    out << doc.dump(1) << "\n";
}

}  // namespace poolsight

#include "poolsight/layers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "poolsight/csv.hpp"

namespace poolsight {

using nlohmann::json;

const NumericAttribute& SpatialLayer::numeric_attr(const std::string& attr) const {
    auto it = numeric.find(attr);
    if (it == numeric.end()) {
        throw DataError("layer '" + name + "' has no numeric attribute '" + attr + "'");
    }
    return it->second;
}

const std::vector<std::string>& SpatialLayer::categorical_attr(const std::string& attr) const {
    auto it = categorical.find(attr);
    if (it == categorical.end()) {
        throw DataError("layer '" + name + "' has no categorical attribute '" + attr + "'");
    }
    return it->second;
}

void SpatialLayer::add_summed_attribute(const std::string& attr_name,
                                        const std::vector<std::string>& operands) {
    const size_t n = size();
    NumericAttribute out;
    out.values.assign(n, 0.0);
    out.missing.assign(n, false);
    for (const auto& op : operands) {
        const NumericAttribute& a = numeric_attr(op);
        for (size_t i = 0; i < n; ++i) {
            if (a.missing[i]) out.missing[i] = true;
            else out.values[i] += a.values[i];
        }
    }
    for (size_t i = 0; i < n; ++i) {
        if (out.missing[i]) out.values[i] = 0.0;
    }
    numeric[attr_name] = std::move(out);
}

double record_area(const MultiPolygon& mp) {
    double a = 0.0;
    for (const Polygon& p : mp) a += polygon_area(p);
    return a;
}

GridIndex::GridIndex(std::vector<BoundingBox> boxes, double cell_size)
    : boxes_(std::move(boxes)), cell_(cell_size) {
    if (boxes_.empty()) return;
    double min_x = boxes_[0].min_x, min_y = boxes_[0].min_y;
    double max_x = boxes_[0].max_x, max_y = boxes_[0].max_y;
    for (const auto& b : boxes_) {
        min_x = std::min(min_x, b.min_x);
        min_y = std::min(min_y, b.min_y);
        max_x = std::max(max_x, b.max_x);
        max_y = std::max(max_y, b.max_y);
    }
    origin_x_ = min_x;
    origin_y_ = min_y;
    nx_ = std::max(1, static_cast<int>((max_x - min_x) / cell_) + 1);
    ny_ = std::max(1, static_cast<int>((max_y - min_y) / cell_) + 1);
    // Cap the grid so pathological extents cannot blow up memory.
    while (static_cast<long long>(nx_) * ny_ > 4'000'000) {
        cell_ *= 2.0;
        nx_ = std::max(1, static_cast<int>((max_x - min_x) / cell_) + 1);
        ny_ = std::max(1, static_cast<int>((max_y - min_y) / cell_) + 1);
    }
    cells_.resize(static_cast<size_t>(nx_) * ny_);
    for (uint32_t i = 0; i < boxes_.size(); ++i) {
        const auto& b = boxes_[i];
        const int x0 = std::clamp(static_cast<int>((b.min_x - origin_x_) / cell_), 0, nx_ - 1);
        const int x1 = std::clamp(static_cast<int>((b.max_x - origin_x_) / cell_), 0, nx_ - 1);
        const int y0 = std::clamp(static_cast<int>((b.min_y - origin_y_) / cell_), 0, ny_ - 1);
        const int y1 = std::clamp(static_cast<int>((b.max_y - origin_y_) / cell_), 0, ny_ - 1);
        for (int gx = x0; gx <= x1; ++gx) {
            for (int gy = y0; gy <= y1; ++gy) {
                cells_[static_cast<size_t>(gx) * ny_ + gy].push_back(i);
            }
        }
    }
}

std::vector<uint32_t> GridIndex::candidates(const BoundingBox& query) const {
    std::vector<uint32_t> out;
    if (boxes_.empty()) return out;
    const int x0 = std::clamp(static_cast<int>((query.min_x - origin_x_) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((query.max_x - origin_x_) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((query.min_y - origin_y_) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((query.max_y - origin_y_) / cell_), 0, ny_ - 1);
    for (int gx = x0; gx <= x1; ++gx) {
        for (int gy = y0; gy <= y1; ++gy) {
            for (uint32_t i : cells_[static_cast<size_t>(gx) * ny_ + gy]) {
                if (boxes_[i].intersects(query)) out.push_back(i);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GridIndex build_index(const SpatialLayer& layer, double cell_size) {
    std::vector<BoundingBox> boxes;
    boxes.reserve(layer.size());
    switch (layer.kind) {
    case GeometryKind::Points:
        for (const Point& p : layer.points) boxes.push_back({p.x, p.y, p.x, p.y});
        break;
    case GeometryKind::Polylines:
        for (const Polyline& l : layer.polylines) boxes.push_back(bounding_box(l));
        break;
    case GeometryKind::Polygons:
        for (const MultiPolygon& mp : layer.polygons) {
            BoundingBox bb = bounding_box(mp.front());
            for (size_t k = 1; k < mp.size(); ++k) {
                const BoundingBox b = bounding_box(mp[k]);
                bb.min_x = std::min(bb.min_x, b.min_x);
                bb.min_y = std::min(bb.min_y, b.min_y);
                bb.max_x = std::max(bb.max_x, b.max_x);
                bb.max_y = std::max(bb.max_y, b.max_y);
            }
            boxes.push_back(bb);
        }
        break;
    }
    return GridIndex(std::move(boxes), cell_size);
}

namespace {

Ring parse_ring(const json& coords, bool want_ccw, const std::string& ctx) {
    Ring ring;
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2) throw DataError(ctx + ": malformed coordinate");
        ring.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (ring.size() >= 2 && !(ring.front() == ring.back())) {
        ring.push_back(ring.front());  // tolerate unclosed rings
    }
    const double a = signed_ring_area(ring);
    if ((want_ccw && a < 0.0) || (!want_ccw && a > 0.0)) {
        std::reverse(ring.begin(), ring.end());
    }
    return ring;
}

Polygon parse_polygon(const json& coords, const std::string& ctx) {
    if (!coords.is_array() || coords.empty()) throw DataError(ctx + ": empty polygon");
    Polygon poly;
    poly.outer = parse_ring(coords[0], true, ctx);
    for (size_t i = 1; i < coords.size(); ++i) {
        poly.holes.push_back(parse_ring(coords[i], false, ctx));
    }
    validate_polygon(poly, ctx);
    return poly;
}

struct PropertyAccumulator {
    std::map<std::string, NumericAttribute> numeric;
    std::map<std::string, std::vector<std::string>> categorical;
    size_t count = 0;

    void start_record() { ++count; }

    void set(const std::string& key, const json& value) {
        if (value.is_number()) {
            auto& attr = numeric[key];
            attr.values.resize(count, 0.0);
            attr.missing.resize(count, true);
            attr.values[count - 1] = value.get<double>();
            attr.missing[count - 1] = false;
        } else if (value.is_string()) {
            auto& attr = categorical[key];
            attr.resize(count);
            attr[count - 1] = value.get<std::string>();
        } else if (value.is_boolean()) {
            auto& attr = numeric[key];
            attr.values.resize(count, 0.0);
            attr.missing.resize(count, true);
            attr.values[count - 1] = value.get<bool>() ? 1.0 : 0.0;
            attr.missing[count - 1] = false;
        }
        // null and structured values stay missing
    }

    void finish(SpatialLayer& layer) {
        for (auto& [k, v] : numeric) {
            v.values.resize(count, 0.0);
            v.missing.resize(count, true);
            layer.numeric[k] = std::move(v);
        }
        for (auto& [k, v] : categorical) {
            v.resize(count);
            layer.categorical[k] = std::move(v);
        }
    }
};

}  // namespace

SpatialLayer load_geojson(const std::string& path, const std::string& layer_name) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open GeoJSON file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(path + ": JSON parse error: " + std::string(e.what()));
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw DataError(path + ": expected a GeoJSON FeatureCollection");
    }

    SpatialLayer layer;
    layer.name = layer_name;
    PropertyAccumulator props;
    bool kind_set = false;

    for (const auto& f : doc["features"]) {
        if (!f.contains("geometry") || f["geometry"].is_null()) continue;
        const json& g = f["geometry"];
        const std::string gtype = g.value("type", "");
        GeometryKind kind;
        if (gtype == "Point") kind = GeometryKind::Points;
        else if (gtype == "LineString") kind = GeometryKind::Polylines;
        else if (gtype == "Polygon" || gtype == "MultiPolygon") kind = GeometryKind::Polygons;
        else throw DataError(path + ": unsupported geometry type '" + gtype + "'");

        if (!kind_set) {
            layer.kind = kind;
            kind_set = true;
        } else if (layer.kind != kind) {
            throw DataError(path + ": mixed geometry types in one layer");
        }

        const json& coords = g["coordinates"];
        if (gtype == "Point") {
            layer.points.push_back({coords[0].get<double>(), coords[1].get<double>()});
        } else if (gtype == "LineString") {
            Polyline line;
            for (const auto& c : coords) {
                line.vertices.push_back({c[0].get<double>(), c[1].get<double>()});
            }
            validate_polyline(line, path);
            layer.polylines.push_back(std::move(line));
        } else if (gtype == "Polygon") {
            layer.polygons.push_back({parse_polygon(coords, path)});
        } else {  // MultiPolygon
            MultiPolygon mp;
            for (const auto& part : coords) mp.push_back(parse_polygon(part, path));
            if (mp.empty()) throw DataError(path + ": empty MultiPolygon");
            layer.polygons.push_back(std::move(mp));
        }

        props.start_record();
        if (f.contains("properties") && f["properties"].is_object()) {
            for (const auto& [k, v] : f["properties"].items()) props.set(k, v);
        }
    }
    if (layer.size() == 0) throw DataError(path + ": layer has no features");
    props.finish(layer);
    return layer;
}

namespace {

json ring_to_json(const Ring& ring) {
    json arr = json::array();
    for (const Point& p : ring) arr.push_back({p.x, p.y});
    return arr;
}

}  // namespace

void save_geojson(const SpatialLayer& layer, const std::string& path) {
    json features = json::array();
    const size_t n = layer.size();
    for (size_t i = 0; i < n; ++i) {
        json geom;
        switch (layer.kind) {
        case GeometryKind::Points:
            geom = {{"type", "Point"}, {"coordinates", {layer.points[i].x, layer.points[i].y}}};
            break;
        case GeometryKind::Polylines: {
            json coords = json::array();
            for (const Point& p : layer.polylines[i].vertices) coords.push_back({p.x, p.y});
            geom = {{"type", "LineString"}, {"coordinates", coords}};
            break;
        }
        case GeometryKind::Polygons: {
            const MultiPolygon& mp = layer.polygons[i];
            auto poly_coords = [](const Polygon& p) {
                json rings = json::array();
                rings.push_back(ring_to_json(p.outer));
                for (const Ring& h : p.holes) rings.push_back(ring_to_json(h));
                return rings;
            };
            if (mp.size() == 1) {
                geom = {{"type", "Polygon"}, {"coordinates", poly_coords(mp[0])}};
            } else {
                json parts = json::array();
                for (const Polygon& p : mp) parts.push_back(poly_coords(p));
                geom = {{"type", "MultiPolygon"}, {"coordinates", parts}};
            }
            break;
        }
        }

        json props = json::object();
        for (const auto& [k, attr] : layer.numeric) {
            if (attr.missing[i]) props[k] = nullptr;
            else props[k] = attr.values[i];
        }
        for (const auto& [k, vals] : layer.categorical) {
            if (vals[i].empty()) props[k] = nullptr;
            else props[k] = vals[i];
        }
        features.push_back({{"type", "Feature"}, {"geometry", geom}, {"properties", props}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", features}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write GeoJSON file: " + path);
    out << doc.dump(1) << "\n";
}

SpatialLayer load_points_csv(const std::string& path, const std::string& layer_name) {
    const csv::Table t = csv::read_file(path);
    const int cx = t.require_column("x", path);
    const int cy = t.require_column("y", path);

    SpatialLayer layer;
    layer.name = layer_name;
    layer.kind = GeometryKind::Points;

    const size_t n = t.rows.size();
    if (n == 0) throw DataError(path + ": no data rows");

    // Classify non-coordinate columns: numeric if every non-empty cell parses.
    for (size_t c = 0; c < t.header.size(); ++c) {
        if (static_cast<int>(c) == cx || static_cast<int>(c) == cy) continue;
        bool all_numeric = true;
        for (const auto& row : t.rows) {
            if (!row[c].empty() && !csv::parse_double(row[c])) {
                all_numeric = false;
                break;
            }
        }
        if (all_numeric) {
            NumericAttribute attr;
            attr.values.assign(n, 0.0);
            attr.missing.assign(n, true);
            for (size_t i = 0; i < n; ++i) {
                if (auto v = csv::parse_double(t.rows[i][c])) {
                    attr.values[i] = *v;
                    attr.missing[i] = false;
                }
            }
            layer.numeric[t.header[c]] = std::move(attr);
        } else {
            std::vector<std::string> attr(n);
            for (size_t i = 0; i < n; ++i) attr[i] = t.rows[i][c];
            layer.categorical[t.header[c]] = std::move(attr);
        }
    }

    for (size_t i = 0; i < n; ++i) {
        auto px = csv::parse_double(t.rows[i][cx]);
        auto py = csv::parse_double(t.rows[i][cy]);
        if (!px || !py) {
            throw DataError(path + ": non-numeric coordinate in row " + std::to_string(i + 2));
        }
        layer.points.push_back({*px, *py});
    }
    return layer;
}

}  // namespace poolsight

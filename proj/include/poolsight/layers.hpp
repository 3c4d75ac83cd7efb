#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poolsight/geometry.hpp"

namespace poolsight {

/// A geospatial layer: one geometry per record plus an attribute table.
/// Numeric attributes carry an explicit missing mask; categorical attributes
/// use the empty string for missing.

enum class GeometryKind { Points, Polylines, Polygons };

/// A record's polygon geometry may have several disjoint parts
/// (GeoJSON MultiPolygon); attribute values refer to the whole record.
using MultiPolygon = std::vector<Polygon>;

struct NumericAttribute {
    std::vector<double> values;
    std::vector<bool> missing;
};

struct SpatialLayer {
    std::string name;
    GeometryKind kind = GeometryKind::Polygons;

    std::vector<Point> points;
    std::vector<Polyline> polylines;
    std::vector<MultiPolygon> polygons;

    std::map<std::string, NumericAttribute> numeric;
    std::map<std::string, std::vector<std::string>> categorical;

    size_t size() const {
        switch (kind) {
        case GeometryKind::Points: return points.size();
        case GeometryKind::Polylines: return polylines.size();
        case GeometryKind::Polygons: return polygons.size();
        }
        return 0;
    }

    const NumericAttribute& numeric_attr(const std::string& attr) const;
    const std::vector<std::string>& categorical_attr(const std::string& attr) const;

    /// Add a numeric attribute that is the element-wise sum of existing ones
    /// (missing if any operand is missing). Used for day-part flow totals.
    void add_summed_attribute(const std::string& name, const std::vector<std::string>& operands);
};

double record_area(const MultiPolygon& mp);

/// Uniform-grid spatial index over per-record bounding boxes.
class GridIndex {
public:
    GridIndex(std::vector<BoundingBox> boxes, double cell_size);

    /// Record indices whose bbox intersects the query box. Sorted, unique.
    std::vector<uint32_t> candidates(const BoundingBox& query) const;

private:
    std::vector<BoundingBox> boxes_;
    double cell_ = 1.0;
    double origin_x_ = 0.0, origin_y_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<uint32_t>> cells_;
};

GridIndex build_index(const SpatialLayer& layer, double cell_size);

/// GeoJSON FeatureCollection I/O. Geometries: Point, LineString, Polygon,
/// MultiPolygon. Ring orientation is normalized on load (outer CCW, holes CW).
/// Property values: numbers -> numeric attrs, strings -> categorical,
/// null -> missing.
SpatialLayer load_geojson(const std::string& path, const std::string& layer_name);
void save_geojson(const SpatialLayer& layer, const std::string& path);

/// Point layer from CSV with x,y columns; remaining columns become numeric
/// attributes when every non-empty cell parses as a number, else categorical.
SpatialLayer load_points_csv(const std::string& path, const std::string& layer_name);

}  // namespace poolsight

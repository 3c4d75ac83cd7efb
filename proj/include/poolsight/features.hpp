#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "poolsight/geometry.hpp"
#include "poolsight/layers.hpp"
#include "poolsight/matrix.hpp"

namespace poolsight {

/// Buffer feature extraction: spatial layers + pool locations in, feature
/// matrix out. Polygon attributes are apportioned into the buffer assuming a
/// uniform spatial distribution over each source polygon.

enum class AttributeKind {
    Count,         // extensive quantity, apportioned by area share
    Average,       // intensive quantity, intersection-area-weighted mean
    Percentage,    // like Average
    CategoryArea,  // categorical polygons -> area per category
    PointSet,      // POI layer -> min distance + density per category
    Flow,          // road polylines with per-mode flows
};

AttributeKind attribute_kind_from_string(const std::string& s);
std::string to_string(AttributeKind k);

/// Value plus the fraction of the buffer not covered by polygons carrying a
/// value for the attribute (uncovered ground counts as missing coverage).
struct ApportionResult {
    std::optional<double> value;
    double missing_coverage = 0.0;
};

ApportionResult apportion_count(const Buffer& buffer, const SpatialLayer& layer,
                                const std::string& attr, const GridIndex* index = nullptr);

ApportionResult areal_mean(const Buffer& buffer, const SpatialLayer& layer,
                           const std::string& attr, const GridIndex* index = nullptr);

struct PoiFeatures {
    std::optional<double> min_dist_m;  // missing when no such point exists anywhere
    double density_per_km2 = 0.0;      // count in buffer / exact 64-gon area
};

/// category_attr empty: every point matches. category_map (optional) maps raw
/// attribute values onto aggregated categories before comparison.
PoiFeatures poi_features(const Point& pool, const Buffer& buffer, const SpatialLayer& pois,
                         const std::string& category_attr = "", const std::string& category = "",
                         const std::map<std::string, std::string>* category_map = nullptr);

/// Intersection area per category of a categorical polygon layer.
std::map<std::string, double> land_use_areas(const Buffer& buffer, const SpatialLayer& layer,
                                             const std::string& category_attr,
                                             const GridIndex* index = nullptr);

struct RoadTrafficFeatures {
    double road_density = 0.0;  // clipped length / buffer area, 1/m
    std::map<std::string, double> traffic_density;  // per mode plus "all"
    std::map<std::string, std::optional<double>> nearest_flow;  // per mode
    std::optional<std::string> nearest_type;
};

/// modes: mode name -> flow attribute names summed into the daily total.
RoadTrafficFeatures road_traffic_features(const Point& pool, const Buffer& buffer,
                                          const SpatialLayer& roads,
                                          const std::map<std::string, std::vector<std::string>>& modes,
                                          const std::string& type_attr = "");

struct PoolSite {
    std::string id;
    Point location;
};

struct FeatureConfigEntry {
    std::string layer;
    std::string attribute;  // unused for Flow; optional for PointSet
    AttributeKind kind = AttributeKind::Count;
    std::map<std::string, std::string> category_map;              // PointSet
    std::map<std::string, std::vector<std::string>> modes;        // Flow
    std::string type_attribute;                                   // Flow
    std::vector<std::string> types;                               // Flow dummy levels
};

std::vector<FeatureConfigEntry> load_feature_config(const std::string& path);
void save_feature_config(const std::vector<FeatureConfigEntry>& entries, const std::string& path);

struct ExtractionSettings {
    double radius_m = 350.0;
    double coverage_threshold = 0.15;    // drop feature if any row gap exceeds this
    double imputation_threshold = 0.015; // median-impute below, drop at or above
};

struct DroppedFeature {
    std::string name;
    std::string reason;
};

struct ImputedFeature {
    std::string name;
    int n_imputed = 0;
    double median = 0.0;
};

struct ExtractionReport {
    std::vector<DroppedFeature> dropped;
    std::vector<ImputedFeature> imputed;
};

/// Raw per-pool feature values with missing mask and per-cell coverage gaps;
/// nothing dropped or imputed yet.
struct RawExtraction {
    FeatureMatrix matrix;
    Eigen::MatrixXd coverage_gap;  // n x p
};

RawExtraction extract_raw(const std::vector<PoolSite>& pools,
                          const std::map<std::string, SpatialLayer>& layers,
                          const std::vector<FeatureConfigEntry>& features, double radius_m);

struct Assembled {
    FeatureMatrix matrix;  // complete: no missing cells
    ExtractionReport report;
};

/// Applies the coverage rule feature-wise (drop if any row's gap exceeds the
/// threshold), then median-imputes features with a sub-threshold share of
/// missing values and drops the rest.
Assembled assemble_matrix(const std::vector<PoolSite>& pools,
                          const std::map<std::string, SpatialLayer>& layers,
                          const std::vector<FeatureConfigEntry>& features,
                          const ExtractionSettings& settings);

struct RadiusSweepEntry {
    double radius_m = 0.0;
    double mse = 0.0;
    int n_rows = 0;
    int n_features = 0;
    std::string error;  // non-empty when the OLS fit failed at this radius
};

/// OLS in-sample MSE per radius, on the observation set that is complete at
/// the smallest radius (rows with any raw missing value there are excluded
/// everywhere, keeping results comparable across radii).
std::vector<RadiusSweepEntry> radius_sweep(const std::vector<PoolSite>& pools,
                                           const std::map<std::string, SpatialLayer>& layers,
                                           const std::vector<FeatureConfigEntry>& features,
                                           const Eigen::VectorXd& y,
                                           const std::vector<double>& radii);

void save_extraction_report(const ExtractionReport& report, const std::string& path);

}  // namespace poolsight

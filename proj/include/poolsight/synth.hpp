#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolsight/decomposition.hpp"
#include "poolsight/features.hpp"
#include "poolsight/layers.hpp"

namespace poolsight {

/// Ground-truth synthetic worlds: a polygon tiling with random attributes,
/// pool locations, optional POI/road layers, and an event log realizing a
/// planted sparse linear model in log-energy space. Feature extraction on the
/// generated layers reproduces the planted design matrix exactly, so
/// end-to-end recovery experiments have a known answer.

struct SynthConfig {
    uint64_t seed = 1;
    int n_pools = 100;
    int n_features = 20;
    std::vector<double> true_support;  // per tile attribute; empty means all zero
    double intercept = 6.0;            // log-energy level
    double noise_sd = 0.1;
    double extent_m = 5000.0;
    double tile_m = 500.0;
    double radius_m = 350.0;
    double min_separation_m = 110.0;  // keeps pools from merging at the 50 m rule
    double attr_correlation = 0.0;    // blend toward a shared per-tile latent factor

    double poi_per_km2 = 0.0;       // 0 disables the POI layer
    double road_spacing_m = 0.0;    // 0 disables the road grid

    double mean_charging_h = 2.5;
    double mean_power_kw = 3.5;
    double event_jitter = 0.5;      // relative spread of per-event weights

    void validate() const;
};

SynthConfig load_synth_config(const std::string& path);

struct SynthWorld {
    std::map<std::string, SpatialLayer> layers;
    std::vector<Station> stations;
    std::vector<PoolSite> pools;
    std::vector<std::string> rollout;  // "strategic" or "demand" per pool
    std::vector<FeatureConfigEntry> feature_config;
    std::vector<ChargingEvent> events;

    FeatureMatrix features;       // extracted at cfg.radius_m; first n_features
                                  // columns are the tile attributes the
                                  // planted support refers to
    Eigen::VectorXd log_energy;   // intercept + X * support + noise
    Eigen::VectorXd energy;
    std::vector<double> true_support;
};

/// Deterministic per seed: the same config yields a bit-identical world.
SynthWorld generate_world(const SynthConfig& cfg);

/// Writes layers (GeoJSON), stations.csv, events.csv, features_config.json
/// and truth.json into the directory, in the formats the pipeline ingests.
void save_world(const SynthWorld& world, const std::string& dir);

}  // namespace poolsight

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poolsight/errors.hpp"
#include "poolsight/matrix.hpp"

namespace poolsight {

/// Per-pool usage aggregates and the simple through-origin models that
/// decompose energy into transactions, charging time and power.

struct ChargingEvent {
    std::string pool_id;
    std::string point_id;
    std::string start_time;  // opaque, carried through
    std::string end_time;
    double connection_h = 0.0;
    double charging_h = 0.0;
    double idle_h = 0.0;
    double energy_kwh = 0.0;
    int rfid_count = 0;
};

std::vector<ChargingEvent> load_events_csv(const std::string& path);
void save_events_csv(std::span<const ChargingEvent> events, const std::string& path);

struct PoolUsage {
    std::string pool_id;
    int n_transactions = 0;          // n
    double avg_charging_time_h = 0;  // t: mean charging time per transaction
    double avg_power_kw = 0;         // p: total energy / total charging time,
                                     // the definition under which y = n*t*p is exact
    double energy_kwh = 0;           // y
    int n_points = 0;
    double capacity_kw = 0;          // sum over points of max observed event power
    double energy_per_point = 0;
    double max_point_energy = 0;
    double energy_per_capacity = 0;
};

/// Aggregates an event log into per-pool usage records (sorted by pool id).
/// Zero charging time with positive energy is a data-quality error naming
/// the offending events.
std::vector<PoolUsage> pool_metrics(std::span<const ChargingEvent> events);

void save_pool_usage_csv(std::span<const PoolUsage> usages, const std::string& path);

struct SimpleModelRow {
    std::string model;   // e.g. "y=kn", "y=k(t*p)"
    double k_hat = 0.0;  // <x,y>/<x,x>
    double r2 = 0.0;     // 1 - RSS / sum(y^2), the no-intercept convention
    double mean = 0.0;   // mean of the per-pool ratio y_i/x_i
    double stdev = 0.0;  // sample standard deviation of the ratio
    double cv = 0.0;     // stdev / mean
    bool skipped = false;
    std::string reason;
};

/// The six decomposition models: y = kn, kt, kp, k(t*p), k(n*p), k(n*t).
std::vector<SimpleModelRow> simple_models(std::span<const PoolUsage> usages);

void save_simple_models_csv(std::span<const SimpleModelRow> rows, const std::string& path);

struct MetricComparison {
    std::vector<std::string> metric_names;
    std::vector<double> ols_r2;            // OLS R^2 of log(metric) on X
    Eigen::MatrixXd metric_correlations;   // pairwise Pearson r of the raw metrics
};

/// The four response variants (energy, energy per point, max point energy,
/// energy per unit capacity) regressed on the feature matrix after a log
/// transform. Usage rows must align with matrix rows.
MetricComparison response_metric_comparison(std::span<const PoolUsage> usages,
                                            const FeatureMatrix& X);

void save_metric_comparison_csv(const MetricComparison& cmp, const std::string& path);

}  // namespace poolsight

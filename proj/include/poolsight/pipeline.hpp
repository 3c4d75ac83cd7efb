#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "poolsight/errors.hpp"

namespace poolsight {

/// Pipeline orchestration: every stage reads its inputs from files, writes
/// its artifacts (reports plus the exact intermediate matrices) and nothing
/// else, so running the stages individually in manifest order reproduces
/// `run` byte for byte. All randomness flows from the single master seed;
/// sub-streams are keyed by stage name or replicate index.

struct PipelineConfig {
    // Inputs: either raw layers + stations + events, or a prebuilt matrix.
    std::map<std::string, std::string> layer_paths;  // layer name -> file path
    std::string stations_path;
    std::string events_path;
    std::string features_config_path;
    std::string rules_path;          // optional missing-value rules
    std::string matrix_path;         // alternative entry point
    std::string matrix_sidecar_path;
    std::string response_path;

    // Analysis parameters. Defaults are the reference constants used
    // throughout: 50 m pool merging, 350 m buffers, 95% zero filter, |r|>0.95
    // grouping, VIF 10, 15% coverage, 1.5% imputation, Cook's 0.015, log
    // response, the 201-point lambda grid, k=10, B=10000, 5% significance
    // with a 10% display cut.
    double pool_merge_radius_m = 50.0;
    double buffer_radius_m = 350.0;
    double zero_fraction = 0.95;
    double correlation_threshold = 0.95;
    double vif_threshold = 10.0;
    double coverage_threshold = 0.15;
    double imputation_threshold = 0.015;
    double cooks_threshold = 0.015;
    std::string response_metric = "energy";
    std::string response_transform = "log";
    double box_cox_lambda = 0.1;
    std::vector<double> lambda_grid;  // empty -> the 201-point default grid
    int k_folds = 10;
    int bootstrap_B = 10000;
    double significance_zero_fraction = 0.05;
    double display_zero_fraction = 0.10;
    double flip_tolerance = 0.01;
    uint64_t seed = 1;
    int threads = 1;
    std::string strata_column;  // stations column for stratified reruns
    bool dump_samples = false;
    std::vector<std::string> correlation_priority;
    std::vector<double> sweep_radii;  // non-empty enables the radius sweep stage

    std::string output_dir = "out";
};

/// Reads a config file, or a manifest written by a previous run (detected by
/// its "config" wrapper), so reruns start from identical resolved settings.
PipelineConfig load_pipeline_config(const std::string& path);
void save_manifest(const PipelineConfig& config, const std::string& path);

/// Individual stages; each expects the previous stage's artifacts on disk.
void stage_extract(const PipelineConfig& config);
void stage_preprocess(const PipelineConfig& config);
void stage_fit(const PipelineConfig& config);
void stage_bootstrap(const PipelineConfig& config);
void stage_distfit(const PipelineConfig& config);
void stage_decompose(const PipelineConfig& config);
void stage_report(const PipelineConfig& config);
void stage_sweep(const PipelineConfig& config);

/// The full stage order: extract (rules + features + responses), preprocess
/// (drops, pruning, VIF, transform, Cook's filter), fit, bootstrap, distfit,
/// decompose, report, plus the sweep when radii are configured.
void run_pipeline(const PipelineConfig& config);

}  // namespace poolsight

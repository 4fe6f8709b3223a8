#pragma once

// Experiment cores shared by the CLI registry and the acceptance suite:
// single training runs with below-edge-of-stability bound tracking, and the
// slope-scan machinery behind the geometry experiments.

#include <optional>
#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/harness.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"
#include "geolab/train.hpp"

namespace geolab::experiments {

struct BeosCheckRow {
    int epoch = 0;
    double lambda_max = 0.0;
    double loss = 0.0;
    double lhs = 0.0;  // weighted path norm
    double rhs = 0.0;  // 1/eta - 1/2 + (R+1) sqrt(2 L)
    bool beos = false;
    bool satisfied = false;
};

struct TrainRunResult {
    double final_loss = 0.0;
    double final_true_mse = 0.0;
    train::Trajectory traj;
    model::Network net0;
    std::vector<BeosCheckRow> beos_rows;  // one per lambda probe
};

// Teacher fixed per ambient dimension, so every run of a sweep shares it.
data::TeacherSpec make_teacher(const harness::ExperimentConfig& cfg, int d);

// One full-batch GD run on a fresh dataset from `dist`. When the config
// requests lambda probes, each probe also evaluates the weighted-path-norm
// bound on the current network. shared_init overrides the seeded init.
TrainRunResult run_training(const harness::ExperimentConfig& cfg, const data::DistSpec& dist,
                            const data::TeacherSpec& teacher, int n, numerics::SeedSpec seed,
                            const model::Network* shared_init = nullptr);

struct SlopeScanGroup {
    std::string label;           // e.g. "10" for d=10 or "1" for alpha=1
    data::DistSpec dist;
    data::TeacherSpec teacher;
};

struct SlopeScanRun {
    std::string group;
    int n = 0;
    std::uint64_t seed = 0;
    double true_mse = 0.0;
    double final_loss = 0.0;
};

struct SlopeScanResult {
    std::vector<SlopeScanRun> runs;
    // per group: mean true MSE per n and the log-log fit over those means
    std::vector<std::pair<std::string, numerics::SlopeFit>> fits;
    std::vector<std::tuple<std::string, int, double>> mean_rows;  // group, n, mean mse
};

// Trains every (group, n, seed) combination (parallel over a worker pool)
// and fits log(mean true MSE) against log(n) per group. In stub mode the
// training is bypassed with an exact power law.
SlopeScanResult slope_scan(const harness::ExperimentConfig& cfg,
                           const std::vector<SlopeScanGroup>& groups);

std::string beos_rows_csv(const std::vector<BeosCheckRow>& rows);

}  // namespace geolab::experiments

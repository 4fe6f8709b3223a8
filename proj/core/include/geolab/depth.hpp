#pragma once

// Approximate Tukey (halfspace) depth over empirical data and the
// depth-versus-prediction-error diagnostic.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"

namespace geolab::depth {

// min over candidate directions u of (1/n) #{i : u.x_i >= u.x}. Candidates
// are n_directions seeded uniform directions, +-x/||x||, and the data-point
// directions when n <= 5000 (which makes the sphere-data property exact).
// include_self = false skips samples exactly equal to x in the count.
double tukey_depth_approx(const Eigen::VectorXd& x, const data::Dataset& data,
                          int n_directions, numerics::SeedSpec seed, bool include_self = true);

struct DepthPoint {
    int index = 0;
    double depth = 0.0;
    double error = 0.0;  // squared prediction error against clean labels
};

struct QuintileRow {
    int quintile = 0;  // 1 (shallowest) .. 5 (deepest)
    double depth_lo = 0.0;
    double depth_hi = 0.0;
    double mean_error = 0.0;
    double median_error = 0.0;
    int count = 0;
};

struct DepthReport {
    std::vector<DepthPoint> points;
    std::vector<QuintileRow> quintiles;
    double spearman = 0.0;  // rank correlation of depth vs error
    int n_directions = 0;
    std::uint64_t seed = 0;
};

// Per-point depth plus squared prediction error against clean labels.
DepthReport depth_error_scan(const model::Network& net, const data::Dataset& data,
                             int n_directions, numerics::SeedSpec seed);

void save_scatter_csv(const DepthReport& report, const std::string& path);
void save_quintiles_csv(const DepthReport& report, const std::string& path);

}  // namespace geolab::depth

#pragma once

// Spherical-cap shattering toolkit: disjoint cap packings, boundary-localized
// ReLU atoms, Monte-Carlo scaling laws for cap mass and atom L2 norms,
// sample-size calibration, Poissonized empty-cap statistics, and the
// indistinguishable-yet-separated function pair built on empty caps.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/numerics.hpp"

namespace geolab::shatter {

// Caps C(u, eps) = {x : u.x > 1 - eps^2} with pairwise-disjoint supports.
struct CapPacking {
    double eps = 0.0;
    double theta = 0.0;        // angular radius arccos(1 - eps^2)
    Eigen::MatrixXd centers;   // N x d unit rows, pairwise angle >= 2*theta

    [[nodiscard]] int count() const { return static_cast<int>(centers.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(centers.cols()); }
};

// d = 2 uses the exact equal-angle construction (floor(pi/theta) arcs);
// d >= 3 packs greedily, stopping after max_attempts consecutive rejections
// (default 10 * eps^-(d-1)).
CapPacking pack_caps(int d, double eps, numerics::SeedSpec seed, int max_attempts = 0);

void save_packing_json(const CapPacking& packing, const std::string& path);

// relu(u.x - (1 - eps^2)); the normalized atom scales by eps^-2 and is
// bounded by 1 on the unit ball.
double atom_eval(const Eigen::VectorXd& u, double eps, const Eigen::VectorXd& x,
                 bool normalized);

// Monte-Carlo estimates under the isotropic alpha-radial law. Sampling is
// over the exact Beta(1, alpha) radius; the angular factor conditional on
// the radius is integrated in closed form (regularized incomplete beta), so
// thin caps at small eps remain resolvable.
struct McValue {
    double value = 0.0;
    double stderr_est = 0.0;  // batch means over 10 batches
};

McValue cap_mass_mc(int d, double alpha, double eps, int n_mc, numerics::SeedSpec seed);
// Squared L2 norm of the *raw* atom phi (not the normalized one).
McValue atom_l2sq_mc(int d, double alpha, double eps, int n_mc, numerics::SeedSpec seed);

struct ScalingRow {
    double eps = 0.0;
    double mass = 0.0;
    double mass_se = 0.0;
    double atom_l2 = 0.0;
    double atom_l2_se = 0.0;
};

struct CapScalingReport {
    numerics::SlopeFit mass_fit;     // log(mass) on log(eps)
    numerics::SlopeFit atom_l2_fit;  // log(||phi||_L2) on log(eps)
    std::vector<ScalingRow> rows;
};

CapScalingReport cap_scaling_report(int d, double alpha, const std::vector<double>& eps_grid,
                                    int n_mc, numerics::SeedSpec seed);

// Calibrates eps so that n * cap-mass(eps) is approximately target_lambda,
// by bisection against the Monte-Carlo mass with shared radius draws.
double choose_eps(int n, int d, double alpha, double target_lambda = 1.0,
                  numerics::SeedSpec seed = {}, int n_mc = 200000);

struct EmptyCapTrial {
    int trial = 0;
    long n_points = 0;  // Poisson(n) draw, or n in the fixed-n comparison
    int empty_count = 0;
    double fraction = 0.0;
};

struct EmptyCapReport {
    double eps = 0.0;
    double lambda_hat = 0.0;          // n * estimated cap mass
    double chernoff_reference = 0.0;  // exp(-lambda_hat)
    CapPacking packing;
    std::vector<EmptyCapTrial> trials;         // Poissonized sample size
    std::vector<EmptyCapTrial> fixed_trials;   // same count with fixed n
    double mean_fraction = 0.0;
    double mean_fraction_fixed = 0.0;
};

// Per trial, draws Poisson(n) points from BetaRadial(d, alpha) and counts
// caps with zero occupancy; a fixed-n comparison run is reported alongside.
// eps defaults to choose_eps(n, ..., target lambda 1).
EmptyCapReport empty_cap_experiment(int n, int d, double alpha, int trials,
                                    numerics::SeedSpec seed,
                                    std::optional<double> eps = std::nullopt);

struct AdversarialPair {
    CapPacking packing;
    std::vector<int> xi;        // all +1
    std::vector<int> xi_prime;  // -1 exactly on the empty caps
    std::vector<int> empty_indices;
    double normalization = 0.0;  // eps^-2
    bool degenerate = false;     // no empty caps: the two functions coincide
};

// Signs differ exactly on caps containing no sample point.
AdversarialPair build_adversarial_pair(const Eigen::MatrixXd& sample_X,
                                       const CapPacking& packing);

// f_xi(x) = sum_i xi_i * normalized-atom_i(x), summed in fixed cap order.
Eigen::VectorXd pair_eval(const AdversarialPair& pair, const Eigen::MatrixXd& X, bool primed);

struct SeparationEstimate {
    double mc = 0.0;       // Monte-Carlo ||f - f'||_L2^2
    double mc_se = 0.0;
    double formula = 0.0;  // 4 * |J| * eps^-4 * ||phi||_L2^2 (disjoint supports)
    int empty_count = 0;
};

SeparationEstimate pair_separation(const AdversarialPair& pair, double alpha, int n_mc,
                                   numerics::SeedSpec seed);

}  // namespace geolab::shatter

#pragma once

// The data-dependent weight function g (empirical and Monte-Carlo
// population), the g-weighted path norm, the below-edge-of-stability bound
// check, activation-rate statistics, and the numerical property checks for
// the weight function: local domination, uniform deviation, tail asymptotics.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"

namespace geolab::weightfn {

struct DirectionThreshold {
    Eigen::VectorXd u;  // unit direction
    double t = 0.0;

    void validate() const;  // ||u|| = 1 within 1e-12
};

// One branch of the weight function: g~(u,t) = p^2 * e * s with
//   p = P(X.u > t),  e = E[X.u - t | X.u > t],  s = sqrt(1 + ||E[X|X.u>t]||^2),
// and g~ := 0 on an empty activation set.
struct GTildeParts {
    double p = 0.0;
    double e = 0.0;
    double s = 0.0;
    double value = 0.0;
};

struct GParts {
    GTildeParts pos;  // (u, t)
    GTildeParts neg;  // (-u, -t)
    double g = 0.0;   // min of the two branch values
};

GParts g_parts(const data::Dataset& data, const DirectionThreshold& q);
double g_empirical(const data::Dataset& data, const DirectionThreshold& q);

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    // False when the caller did not confirm lambda_max <= 2/eta; the
    // inequality is then reported but not implied by stability.
    bool bound_implied = false;
};

struct NeuronWeightRow {
    int k = 0;
    double a = 0.0;  // |v_k| * ||w_k||
    double t = 0.0;  // b_k / ||w_k||
    double g = 0.0;
    double activation_rate = 0.0;
    GTildeParts pos, neg;
};

struct WeightedNormReport {
    double total = 0.0;
    std::vector<NeuronWeightRow> per_neuron;
    std::optional<BoundCheck> bound;
};

// sum_k |v_k| ||w_k|| * g(w_k/||w_k||, b_k/||w_k||); invariant under
// homogeneous rescaling.
WeightedNormReport weighted_path_norm(const model::Network& net, const data::Dataset& data);

void write_report_csv(const WeightedNormReport& report, const std::string& path);

// lhs = weighted path norm, rhs = 1/eta - 1/2 + (R+1) sqrt(2 L(theta)).
BoundCheck beos_bound_check(const model::Network& net, const data::Dataset& data, double eta,
                            std::optional<bool> beos_confirmed = std::nullopt);

struct ActivationStats {
    std::vector<double> rates;                           // per neuron, strict indicator
    std::vector<double> hist_edges;                      // 21 edges on [0,1]
    std::vector<int> hist_counts;                        // 20 bins
    std::vector<std::pair<double, double>> coef_vs_rate; // (rate, |v_k| ||w_k||)
};

ActivationStats activation_rates(const model::Network& net, const data::Dataset& data);

struct McEstimate {
    double estimate = 0.0;
    double stderr_est = 0.0;  // batch means over 10 batches
};

// Monte-Carlo plug-in of the population weight function under fresh samples.
McEstimate g_population_mc(const data::DistSpec& spec, const DirectionThreshold& q, int n_mc,
                           numerics::SeedSpec seed);

struct DominationRow {
    int probe = 0;
    double t = 0.0;
    double g_global = 0.0;
    double g_global_se = 0.0;
    double g_local = 0.0;
    double g_local_se = 0.0;
    double margin_raw = 0.0;    // g - (p_j^2/sqrt(2)) g_j
    double margin_slack = 0.0;  // margin_raw + 3 * combined stderr
};

struct DominationResult {
    double min_margin_raw = 0.0;
    double min_margin_slack = 0.0;
    std::vector<DominationRow> rows;

    [[nodiscard]] bool passed() const { return min_margin_slack >= 0.0; }
};

// Checks g >= (p_j^2/sqrt(2)) g_j at each probe, comparing Monte-Carlo
// estimates of the mixture weight against the component-conditional one.
DominationResult g_domination_check(const data::DistSpec& spec, int component,
                                    const std::vector<DirectionThreshold>& probes, int n_mc,
                                    numerics::SeedSpec seed);

struct DeviationScanOptions {
    int pop_mc_samples = 400000;  // population reference sample size
    int repeats = 5;              // datasets per n, sup-deviation averaged
};

struct DeviationRow {
    int n = 0;
    int repeat = 0;
    double sup_dev = 0.0;
};

struct DeviationScan {
    numerics::SlopeFit fit;  // log(mean sup-deviation) on log(n)
    std::vector<DeviationRow> rows;
    std::vector<double> mean_dev_per_n;
};

// Empirical check of the distribution-free uniform deviation of g: the
// sup over a fixed seeded probe grid of |g_D - g_P| should shrink like
// n^{-1/2}. The grid is a documented under-estimate of the continuum sup.
DeviationScan g_deviation_scan(const data::DistSpec& spec, const std::vector<int>& n_values,
                               int probes_per_n, numerics::SeedSpec seed,
                               const DeviationScanOptions& opt = {});

// Seeded probe grid: uniform sphere directions crossed with a uniform
// threshold grid on [-R, R].
std::vector<DirectionThreshold> probe_grid(int d, double R, int count,
                                           numerics::SeedSpec seed);

}  // namespace geolab::weightfn

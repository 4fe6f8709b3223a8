#pragma once

// Shared numerical utilities: splittable seeded RNG, log-log OLS fits,
// power iteration on an abstract linear operator, and small statistics
// helpers used across the experiment suites.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "geolab/errors.hpp"

namespace geolab::numerics {

// ---------------------------------------------------------------------------
// Seeding and random streams
// ---------------------------------------------------------------------------

// (master_seed, stream_id) fully determines a random stream. Distinct
// stream ids give independently mixed streams of the same master seed.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    // Derived stream: mixes an extra id into the stream id (splitmix64).
    [[nodiscard]] SeedSpec stream(std::uint64_t id) const;
};

// One step of the splitmix64 output function.
std::uint64_t splitmix64(std::uint64_t& state);

// Counter-based generator over splitmix64. All distributions are
// implemented in-house so streams are bit-stable across standard libraries.
class Rng {
  public:
    explicit Rng(SeedSpec seed);

    std::uint64_t next_u64();
    double uniform01();                    // [0, 1)
    double uniform01_open();               // (0, 1), safe for log()
    double uniform(double lo, double hi);
    double normal();                       // Box-Muller, cached spare
    std::uint64_t poisson(double mean);    // exact (sum of exponentials)
    std::size_t categorical(const std::vector<double>& probs);

    Eigen::VectorXd gaussian_vector(int n);
    Eigen::VectorXd on_sphere(int dim);    // uniform on the unit sphere
    Eigen::VectorXd in_ball(int dim);      // uniform in the unit ball

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Log-log ordinary least squares
// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
    double stderr_slope = 0.0;
};

// Fits log(ys) against log(xs). All entries must be strictly positive and
// there must be at least three points. A constant series reports slope 0
// with r2 = 1 and stderr 0.
SlopeFit ols_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

// Plain OLS of ys on xs (no logs); same conventions.
SlopeFit ols_linear(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct PowerIterResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Estimates the top eigenvalue of a symmetric PSD operator, starting from
// a seeded uniform-on-sphere vector. Stops when the relative change of the
// Rayleigh quotient drops below tol. Restarts once with a fresh vector if
// the iterate collapses (start orthogonal to the top eigenspace).
// `start` overrides the seeded initial vector (used by tests).
PowerIterResult power_iteration(const LinearOperator& matvec, int dim, double tol,
                                int max_iter, SeedSpec seed,
                                const std::optional<Eigen::VectorXd>& start = std::nullopt);

// ---------------------------------------------------------------------------
// Small statistics helpers
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased (n-1)

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace geolab::numerics

#pragma once

// Feature samplers (beta-radial, mixtures of low-dimensional balls, sphere,
// ball, gaussian), teacher label generators, and CSV ingestion.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "geolab/errors.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"

namespace geolab::data {

struct Dataset {
    Eigen::MatrixXd X;  // n x d, one sample per row
    Eigen::VectorXd y;  // labels (may be empty before gen_labels)
    double R = 0.0;     // max_i ||x_i||
    double D = 0.0;     // max_i |y_i|
    std::optional<Eigen::VectorXd> clean_labels;
    std::optional<std::vector<int>> component;  // 0-based mixture component

    [[nodiscard]] int n() const { return static_cast<int>(X.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(X.cols()); }
    void recompute_bounds();
};

struct DistSpec {
    enum class Kind { BetaRadial, MixtureBalls, Sphere, Ball, Gaussian };

    Kind kind = Kind::Ball;
    int d = 1;
    double alpha = 1.0;  // BetaRadial concentration
    // MixtureBalls
    int m = 1;
    int J = 1;
    std::vector<double> mix_probs;  // empty => uniform
    std::uint64_t subspace_seed = 0;
    bool affine_offsets = false;

    void validate() const;
    [[nodiscard]] std::vector<double> probs() const;  // resolved, sums to 1

    static DistSpec beta_radial(int d, double alpha);
    static DistSpec mixture_balls(int d, int m, int J, std::uint64_t subspace_seed = 0,
                                  std::vector<double> probs = {}, bool affine = false);
    static DistSpec sphere(int d);
    static DistSpec ball(int d);
    static DistSpec gaussian(int d);
};

// Haar-random orthonormal bases (d x m) of the mixture subspaces, a pure
// function of (d, m, J, subspace_seed). With affine_offsets, offsets() gives
// the per-component centers (norm <= 1/2).
std::vector<Eigen::MatrixXd> mixture_subspaces(const DistSpec& spec);
std::vector<Eigen::VectorXd> mixture_offsets(const DistSpec& spec);

Dataset sample_features(const DistSpec& spec, int n, numerics::SeedSpec seed);

// Sampling conditioned on one mixture component (MixtureBalls only).
Dataset sample_features_component(const DistSpec& spec, int component, int n,
                                  numerics::SeedSpec seed);

struct TeacherSpec {
    enum class Kind { ReluNet, Quadratic };

    Kind kind = Kind::Quadratic;
    double noise_sigma = 0.0;

    model::Network relu;  // ReluNet
    Eigen::MatrixXd A;    // Quadratic: x'Ax + b'x + c
    Eigen::VectorXd b;
    double c = 0.0;

    // A = sym(G)/sqrt(d), b ~ N(0, 1/d), c = 0; outputs are O(1) on the ball.
    static TeacherSpec random_quadratic(int d, double noise_sigma, numerics::SeedSpec seed);
    static TeacherSpec random_relu(int d, int width, double noise_sigma,
                                   numerics::SeedSpec seed);
    static TeacherSpec quadratic(Eigen::MatrixXd A, Eigen::VectorXd b, double c,
                                 double noise_sigma);

    [[nodiscard]] Eigen::VectorXd evaluate(const Eigen::MatrixXd& X) const;
};

// Fills labels = teacher(x) + noise and clean_labels = teacher(x); D is
// recomputed from the noisy labels.
void gen_labels(const TeacherSpec& teacher, Dataset& data, numerics::SeedSpec seed);

// Features + labels in one call; label noise uses a derived stream.
Dataset make_dataset(const DistSpec& dist, const TeacherSpec& teacher, int n,
                     numerics::SeedSpec seed);

// CSV: comma separated, optional header row auto-detected by a non-numeric
// first row, one sample per row. label_column is 0-based; the remaining
// columns become features (optionally scaled by normalize_scale).
Dataset load_csv_dataset(const std::string& path, int label_column,
                         std::optional<double> normalize_scale = std::nullopt);

}  // namespace geolab::data

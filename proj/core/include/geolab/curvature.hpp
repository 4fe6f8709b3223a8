#pragma once

// Exact curvature of the MSE loss for the two-layer ReLU model:
// Hessian-vector products, the tangent-feature factorization, top-eigenvalue
// estimation, and a dense assembly for small instances.

#include <Eigen/Dense>

#include <optional>

#include "geolab/data.hpp"
#include "geolab/model.hpp"
#include "geolab/numerics.hpp"

namespace geolab::curvature {

enum class Method { PowerHvp, Dense, TangentFeatures };

struct CurvatureReport {
    double lambda_max = 0.0;
    int iterations = 0;
    Method method = Method::PowerHvp;
    std::optional<double> two_over_eta;
    std::optional<bool> beos;
    bool converged = true;
    bool kink_warning = false;  // some |z_ik| below kink_tol
    double shift_used = 0.0;
};

// |z_ik| below this triggers a kink warning: the loss is not twice
// differentiable there (the strict indicator is still used).
constexpr double kKinkTol = 1e-9;

// Precomputes activations and residuals once; apply() is then two GEMMs.
class HvpOperator {
  public:
    HvpOperator(const model::Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
    HvpOperator(const model::Network& net, const data::Dataset& data);

    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& vec) const;
    [[nodiscard]] int param_count() const { return net_.param_count(); }
    [[nodiscard]] bool kink_warning() const { return kink_warning_; }
    [[nodiscard]] double loss() const { return loss_; }
    [[nodiscard]] const model::Network& net() const { return net_; }

  private:
    model::Network net_;
    Eigen::MatrixXd X_;
    Eigen::MatrixXd Z_;       // pre-activations
    Eigen::ArrayXXd active_;  // strict indicator as 0/1
    Eigen::VectorXd r_;       // residuals f(x_i) - y_i
    double loss_ = 0.0;
    bool kink_warning_ = false;
};

Eigen::VectorXd hvp(const model::Network& net, const data::Dataset& data,
                    const Eigen::VectorXd& vec);

// Column i is the parameter gradient of f at x_i (flat layout).
Eigen::MatrixXd tangent_features(const model::Network& net, const data::Dataset& data);

// Top (signed) Hessian eigenvalue via power iteration on the HVP. Near
// interpolation the operator is PSD and is used directly; otherwise the
// iteration runs on H + cI with an adaptive spectral shift (a first unshifted
// pass estimates the spectral radius) and c is subtracted.
CurvatureReport lambda_max(const model::Network& net, const data::Dataset& data,
                           double tol = 1e-8, int max_iter = 5000,
                           numerics::SeedSpec seed = {}, std::optional<double> eta = {});

// Explicit p x p Hessian; refuses instances above the size cap.
Eigen::MatrixXd dense_hessian(const model::Network& net, const data::Dataset& data,
                              int max_params = 2000);

// Exact top eigenvalue at an interpolating point through the n x n Gram
// matrix of tangent features (lambda_max(Phi Phi'/n) = lambda_max(Phi'Phi/n)).
double lambda_max_tangent_gram(const model::Network& net, const data::Dataset& data);

}  // namespace geolab::curvature

#pragma once

// Two-layer ReLU hypothesis: evaluation, MSE loss with analytic gradient,
// homogeneous rescaling, unweighted path norm, and checkpoint I/O.

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "geolab/errors.hpp"
#include "geolab/numerics.hpp"

namespace geolab::data {
struct Dataset;
}

namespace geolab::model {

// f(x) = sum_k v_k * relu(w_k . x - b_k) + beta. Rows of W are the w_k.
// K = 0 is permitted (the function is the constant beta); any present row
// must be nonzero.
struct Network {
    Eigen::MatrixXd W;  // K x d
    Eigen::VectorXd b;  // K
    Eigen::VectorXd v;  // K
    double beta = 0.0;
    bool has_output_bias = true;

    [[nodiscard]] int width() const { return static_cast<int>(W.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(W.cols()); }
    // Flat layout: [rows of W; b; v; beta (if present)].
    [[nodiscard]] int param_count() const {
        return width() * (dim() + 2) + (has_output_bias ? 1 : 0);
    }

    void validate() const;  // nonzero rows, consistent sizes
};

struct TrainConfig {
    double eta = 0.4;
    int epochs = 1;
    std::optional<double> clip_norm;       // global l2 gradient clipping
    int eval_every = 100;
    std::optional<int> lambda_max_every;   // curvature probe cadence
    double init_scale = 1.0;
    numerics::SeedSpec seed;

    void validate() const;
};

// Seeded initialization: W rows ~ N(0, (init_scale/sqrt(d))^2), b = 0,
// v = +-init_scale/sqrt(K), beta = 0.
Network init_network(int d, int width, double init_scale, bool has_output_bias,
                     numerics::SeedSpec seed);

// Flat parameter vector round trip (layout documented on Network).
Eigen::VectorXd pack_params(const Network& net);
Network unpack_params(const Eigen::VectorXd& theta, int d, int width, bool has_output_bias);

Eigen::VectorXd forward(const Network& net, const Eigen::MatrixXd& X);

struct LossGrad {
    double loss = 0.0;
    Eigen::MatrixXd gW;  // K x d
    Eigen::VectorXd gb;  // K
    Eigen::VectorXd gv;  // K
    double gbeta = 0.0;

    [[nodiscard]] Eigen::VectorXd pack(bool has_output_bias) const;
    [[nodiscard]] double norm(bool has_output_bias) const;
};

// Scratch buffers so repeated gradient evaluations (training loops) do not
// reallocate n x K temporaries every epoch.
struct GradWorkspace {
    Eigen::MatrixXd Z;  // pre-activations, then relu outputs
    Eigen::MatrixXd M;  // masked residual-times-v
    Eigen::VectorXd r;  // residuals
};

// L = (1/2n) sum_i (f(x_i) - y_i)^2 with the strict activation indicator
// z > 0 (the gradient contribution at a kink is 0).
LossGrad loss_and_grad(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
LossGrad loss_and_grad(const Network& net, const data::Dataset& data);
void loss_and_grad(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   GradWorkspace& ws, LossGrad& out);

double mse(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& target);

struct RescaleResult {
    Network net;
    int dropped = 0;  // neurons removed because v_k == 0
};

// Positive 1-homogeneity: v -> sign(v), (w, b) -> |v| (w, b). The realized
// function and the unweighted path norm are unchanged.
RescaleResult rescale_homogeneous(const Network& net);

// sum_k |v_k| * ||w_k||_2
double path_norm_unweighted(const Network& net);

struct CheckpointProvenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    int epoch = 0;
};

void save_checkpoint(const Network& net, const std::string& path,
                     const CheckpointProvenance& prov);
struct Checkpoint {
    Network net;
    CheckpointProvenance provenance;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace geolab::model

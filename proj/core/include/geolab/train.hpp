#pragma once

// Full-batch vanilla gradient descent with optional global-norm clipping,
// trajectory logging (loss, true MSE, lambda_max) and below-edge-of-stability
// flagging.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/model.hpp"

namespace geolab::train {

struct TrajectoryRecord {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> true_mse;
    std::optional<double> lambda_max;
    std::optional<bool> beos;  // lambda_max <= 2/eta
    double grad_norm = 0.0;
    bool clipped = false;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    model::Network final_net;
};

// Raised when the loss blows up (> 1e12) or turns non-finite; carries the
// last finite record for diagnostics.
struct DivergenceError : NumericError {
    DivergenceError(const std::string& msg, TrajectoryRecord last)
        : NumericError(msg), last_record(last) {}
    TrajectoryRecord last_record;
};

// Optional curvature probe, decoupled from the curvature module: given the
// current network, return an estimate of lambda_max(H).
using CurvatureProbe = std::function<double(const model::Network&)>;

// theta_{t+1} = theta_t - eta g_t with g_t rescaled to clip_norm when its
// global l2 norm exceeds it. Records are emitted at epoch 0, every
// eval_every epochs, and at the final epoch; lambda_max is probed every
// lambda_max_every epochs when a probe is supplied. true MSE (against
// clean labels) is recorded when the dataset carries them.
Trajectory gd_train(const model::Network& net0, const data::Dataset& data,
                    const model::TrainConfig& cfg,
                    const CurvatureProbe& curvature_probe = nullptr);

// Trajectory rows as CSV (epoch,train_loss,true_mse,lambda_max,beos,
// grad_norm,clipped); absent optionals are empty cells.
std::string trajectory_csv(const Trajectory& traj);
void save_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace geolab::train

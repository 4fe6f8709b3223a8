#include "geolab/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace geolab::train {

using model::LossGrad;
using model::Network;

namespace {
constexpr double kDivergenceThreshold = 1e12;

TrajectoryRecord make_record(int epoch, const Network& net, const data::Dataset& data,
                             double loss, double grad_norm, bool clipped,
                             const model::TrainConfig& cfg, const CurvatureProbe& probe,
                             bool probe_now) {
    TrajectoryRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss;
    rec.grad_norm = grad_norm;
    rec.clipped = clipped;
    if (data.clean_labels)
        rec.true_mse = model::mse(net, data.X, *data.clean_labels);
    if (probe && probe_now) {
        rec.lambda_max = probe(net);
        rec.beos = *rec.lambda_max <= 2.0 / cfg.eta;
    }
    return rec;
}
}  // namespace

Trajectory gd_train(const Network& net0, const data::Dataset& data,
                    const model::TrainConfig& cfg, const CurvatureProbe& curvature_probe) {
    cfg.validate();
    net0.validate();
    if (data.n() == 0) throw ArityError("gd_train: empty dataset");

    Network net = net0;
    Trajectory traj;
    TrajectoryRecord last_finite;
    model::GradWorkspace ws;
    LossGrad lg;

    const int probe_every = cfg.lambda_max_every.value_or(0);
    for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
        model::loss_and_grad(net, data.X, data.y, ws, lg);
        if (!std::isfinite(lg.loss) || lg.loss > kDivergenceThreshold)
            throw DivergenceError("gd_train: loss diverged at epoch " + std::to_string(epoch),
                                  last_finite);

        double gnorm = lg.norm(net.has_output_bias);
        bool clipped = false;
        double scale = 1.0;
        if (cfg.clip_norm && gnorm > *cfg.clip_norm) {
            scale = *cfg.clip_norm / gnorm;
            clipped = true;
        }

        const bool record_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        const bool probe_now = probe_every > 0 && (epoch % probe_every == 0 || epoch == cfg.epochs);
        if (record_now || probe_now) {
            TrajectoryRecord rec = make_record(epoch, net, data, lg.loss, gnorm, clipped, cfg,
                                               curvature_probe, probe_now);
            traj.records.push_back(rec);
            last_finite = rec;
        } else {
            last_finite.epoch = epoch;
            last_finite.train_loss = lg.loss;
            last_finite.grad_norm = gnorm;
            last_finite.clipped = clipped;
        }
        if (epoch == cfg.epochs) break;

        net.W -= (cfg.eta * scale) * lg.gW;
        net.b -= (cfg.eta * scale) * lg.gb;
        net.v -= (cfg.eta * scale) * lg.gv;
        if (net.has_output_bias) net.beta -= cfg.eta * scale * lg.gbeta;
    }
    traj.final_net = std::move(net);
    return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "epoch,train_loss,true_mse,lambda_max,beos,grad_norm,clipped\n";
    char buf[64];
    const auto fmt = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    for (const auto& r : traj.records) {
        out += std::to_string(r.epoch) + ',' + fmt(r.train_loss) + ',';
        if (r.true_mse) out += fmt(*r.true_mse);
        out += ',';
        if (r.lambda_max) out += fmt(*r.lambda_max);
        out += ',';
        if (r.beos) out += *r.beos ? "1" : "0";
        out += ',' + fmt(r.grad_norm) + ',' + (r.clipped ? std::string("1") : std::string("0")) +
               '\n';
    }
    return out;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("save_trajectory_csv: cannot write " + path);
    out << trajectory_csv(traj);
}

}  // namespace geolab::train

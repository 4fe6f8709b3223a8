#include "geolab/model.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "geolab/data.hpp"

namespace geolab::model {

using numerics::Rng;
using numerics::SeedSpec;

void Network::validate() const {
    if (b.size() != width() || v.size() != width())
        throw ArityError("Network: inconsistent parameter sizes");
    for (int k = 0; k < width(); ++k)
        if (W.row(k).norm() == 0.0) throw SpecError("Network: zero inner weight row");
}

void TrainConfig::validate() const {
    if (!(eta > 0.0)) throw SpecError("TrainConfig: eta must be > 0");
    if (epochs < 1) throw SpecError("TrainConfig: epochs must be >= 1");
    if (clip_norm && !(*clip_norm > 0.0)) throw SpecError("TrainConfig: clip_norm must be > 0");
    if (eval_every < 1) throw SpecError("TrainConfig: eval_every must be >= 1");
    if (lambda_max_every && *lambda_max_every < 1)
        throw SpecError("TrainConfig: lambda_max_every must be >= 1");
}

Network init_network(int d, int width, double init_scale, bool has_output_bias,
                     SeedSpec seed) {
    if (d < 1 || width < 1) throw ArityError("init_network: d and width must be >= 1");
    Rng rng(seed.stream(7));
    Network net;
    net.W.resize(width, d);
    const double wscale = init_scale / std::sqrt(double(d));
    for (int k = 0; k < width; ++k)
        for (int j = 0; j < d; ++j) net.W(k, j) = wscale * rng.normal();
    net.b = Eigen::VectorXd::Zero(width);
    net.v.resize(width);
    const double vscale = init_scale / std::sqrt(double(width));
    for (int k = 0; k < width; ++k) net.v[k] = rng.uniform01() < 0.5 ? -vscale : vscale;
    net.beta = 0.0;
    net.has_output_bias = has_output_bias;
    return net;
}

Eigen::VectorXd pack_params(const Network& net) {
    const int K = net.width(), d = net.dim();
    Eigen::VectorXd theta(net.param_count());
    for (int k = 0; k < K; ++k) theta.segment(k * d, d) = net.W.row(k);
    theta.segment(K * d, K) = net.b;
    theta.segment(K * d + K, K) = net.v;
    if (net.has_output_bias) theta[K * d + 2 * K] = net.beta;
    return theta;
}

Network unpack_params(const Eigen::VectorXd& theta, int d, int width, bool has_output_bias) {
    const int expected = width * (d + 2) + (has_output_bias ? 1 : 0);
    if (theta.size() != expected) throw ArityError("unpack_params: wrong vector length");
    Network net;
    net.W.resize(width, d);
    for (int k = 0; k < width; ++k) net.W.row(k) = theta.segment(k * d, d);
    net.b = theta.segment(width * d, width);
    net.v = theta.segment(width * d + width, width);
    net.beta = has_output_bias ? theta[width * d + 2 * width] : 0.0;
    net.has_output_bias = has_output_bias;
    return net;
}

Eigen::VectorXd forward(const Network& net, const Eigen::MatrixXd& X) {
    if (X.cols() != net.dim() && net.width() > 0)
        throw ArityError("forward: feature dimension mismatch");
    if (net.width() == 0)
        return Eigen::VectorXd::Constant(X.rows(), net.beta);
    Eigen::MatrixXd Z = X * net.W.transpose();
    Z.rowwise() -= net.b.transpose();
    Eigen::VectorXd out = Z.cwiseMax(0.0) * net.v;
    out.array() += net.beta;
    return out;
}

Eigen::VectorXd LossGrad::pack(bool has_output_bias) const {
    const int K = static_cast<int>(gW.rows()), d = static_cast<int>(gW.cols());
    Eigen::VectorXd g(K * (d + 2) + (has_output_bias ? 1 : 0));
    for (int k = 0; k < K; ++k) g.segment(k * d, d) = gW.row(k);
    g.segment(K * d, K) = gb;
    g.segment(K * d + K, K) = gv;
    if (has_output_bias) g[K * d + 2 * K] = gbeta;
    return g;
}

double LossGrad::norm(bool has_output_bias) const {
    double sq = gW.squaredNorm() + gb.squaredNorm() + gv.squaredNorm();
    if (has_output_bias) sq += gbeta * gbeta;
    return std::sqrt(sq);
}

void loss_and_grad(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   GradWorkspace& ws, LossGrad& out) {
    if (X.rows() == 0) throw ArityError("loss_and_grad: empty data");
    if (X.rows() != y.size()) throw ArityError("loss_and_grad: feature/label count mismatch");
    const int n = static_cast<int>(X.rows());
    const int K = net.width();
    const double inv_n = 1.0 / n;

    if (K == 0) {
        ws.r = Eigen::VectorXd::Constant(n, net.beta) - y;
        out.loss = 0.5 * inv_n * ws.r.squaredNorm();
        out.gW.resize(0, net.dim());
        out.gb.resize(0);
        out.gv.resize(0);
        out.gbeta = net.has_output_bias ? inv_n * ws.r.sum() : 0.0;
        return;
    }
    if (X.cols() != net.dim()) throw ArityError("loss_and_grad: feature dimension mismatch");

    ws.Z.resize(n, K);
    ws.Z.noalias() = X * net.W.transpose();
    ws.Z.rowwise() -= net.b.transpose();
    ws.M.resize(n, K);
    // Strict indicator: exactly-zero pre-activations contribute nothing.
    ws.M.array() = (ws.Z.array() > 0.0).cast<double>();
    ws.Z.array() *= ws.M.array();  // relu outputs in place
    ws.r.noalias() = ws.Z * net.v;
    ws.r.array() += net.beta;
    ws.r -= y;

    out.loss = 0.5 * inv_n * ws.r.squaredNorm();
    out.gv.resize(K);
    out.gv.noalias() = inv_n * (ws.Z.transpose() * ws.r);
    ws.M.array() *= (ws.r * net.v.transpose()).array();
    out.gW.resize(K, net.dim());
    out.gW.noalias() = inv_n * (ws.M.transpose() * X);
    out.gb = -inv_n * ws.M.colwise().sum().transpose();
    out.gbeta = net.has_output_bias ? inv_n * ws.r.sum() : 0.0;
}

LossGrad loss_and_grad(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    GradWorkspace ws;
    LossGrad out;
    loss_and_grad(net, X, y, ws, out);
    return out;
}

LossGrad loss_and_grad(const Network& net, const data::Dataset& data) {
    return loss_and_grad(net, data.X, data.y);
}

double mse(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& target) {
    Eigen::VectorXd pred = forward(net, X);
    return (pred - target).squaredNorm() / double(X.rows());
}

RescaleResult rescale_homogeneous(const Network& net) {
    RescaleResult res;
    res.net.has_output_bias = net.has_output_bias;
    res.net.beta = net.beta;
    std::vector<int> keep;
    for (int k = 0; k < net.width(); ++k) {
        if (net.v[k] == 0.0)
            ++res.dropped;  // contributes nothing to the realized function
        else
            keep.push_back(k);
    }
    const int K = static_cast<int>(keep.size());
    res.net.W.resize(K, net.dim());
    res.net.b.resize(K);
    res.net.v.resize(K);
    for (int i = 0; i < K; ++i) {
        const int k = keep[i];
        const double a = std::abs(net.v[k]);
        res.net.W.row(i) = a * net.W.row(k);
        res.net.b[i] = a * net.b[k];
        res.net.v[i] = net.v[k] > 0.0 ? 1.0 : -1.0;
    }
    return res;
}

double path_norm_unweighted(const Network& net) {
    double total = 0.0;
    for (int k = 0; k < net.width(); ++k) total += std::abs(net.v[k]) * net.W.row(k).norm();
    return total;
}

void save_checkpoint(const Network& net, const std::string& path,
                     const CheckpointProvenance& prov) {
    nlohmann::json j;
    j["d"] = net.dim();
    j["K"] = net.width();
    j["has_output_bias"] = net.has_output_bias;
    j["W"] = nlohmann::json::array();
    for (int k = 0; k < net.width(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < net.dim(); ++c) row.push_back(net.W(k, c));
        j["W"].push_back(std::move(row));
    }
    j["b"] = std::vector<double>(net.b.data(), net.b.data() + net.b.size());
    j["v"] = std::vector<double>(net.v.data(), net.v.data() + net.v.size());
    j["beta"] = net.beta;
    j["provenance"] = {{"config_hash", prov.config_hash}, {"seed", prov.seed},
                       {"epoch", prov.epoch}};
    std::ofstream out(path);
    if (!out) throw IngestionError("save_checkpoint: cannot write " + path);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    in >> j;
    Checkpoint cp;
    const int d = j.at("d").get<int>();
    const int K = j.at("K").get<int>();
    cp.net.has_output_bias = j.at("has_output_bias").get<bool>();
    cp.net.W.resize(K, d);
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < d; ++c) cp.net.W(k, c) = j.at("W")[k][c].get<double>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto v = j.at("v").get<std::vector<double>>();
    cp.net.b = Eigen::Map<const Eigen::VectorXd>(b.data(), K);
    cp.net.v = Eigen::Map<const Eigen::VectorXd>(v.data(), K);
    cp.net.beta = j.at("beta").get<double>();
    cp.provenance.config_hash = j.at("provenance").at("config_hash").get<std::string>();
    cp.provenance.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    cp.provenance.epoch = j.at("provenance").at("epoch").get<int>();
    return cp;
}

}  // namespace geolab::model

#include "geolab/flatnet.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "geolab/curvature.hpp"

namespace geolab::flatnet {

namespace {
constexpr double kUnitTol = 1e-9;
constexpr double kDistinctTol = 1e-9;
constexpr double kZeroLabelTol = 1e-12;
}  // namespace

FlatBuildReport build_flat_interpolator(const data::Dataset& data, bool with_output_bias) {
    const int n = data.n();
    if (n == 0) throw ArityError("build_flat_interpolator: empty dataset");
    if (data.y.size() != n) throw ArityError("build_flat_interpolator: labels missing");
    for (int i = 0; i < n; ++i)
        if (std::abs(data.X.row(i).norm() - 1.0) > kUnitTol)
            throw DomainError("build_flat_interpolator: input " + std::to_string(i) +
                              " is not a unit vector");

    // Gram matrix; also catches near-duplicates (rho_k would reach 1). The
    // distance is recomputed directly for near-unit dot products, where the
    // 2 - 2*G form loses all precision.
    Eigen::MatrixXd G = data.X * data.X.transpose();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (G(i, j) > 1.0 - 1e-12 &&
                (data.X.row(i) - data.X.row(j)).norm() <= kDistinctTol)
                throw DomainError("build_flat_interpolator: inputs " + std::to_string(i) +
                                  " and " + std::to_string(j) + " coincide");

    FlatBuildReport report;
    std::vector<int> picks;
    for (int k = 0; k < n; ++k)
        if (std::abs(data.y[k]) > kZeroLabelTol) picks.push_back(k);
    const int K = static_cast<int>(picks.size());
    report.width = K;
    report.sample_of_neuron = picks;

    model::Network net;
    net.has_output_bias = with_output_bias;
    net.beta = 0.0;
    net.W.resize(K, data.dim());
    net.b.resize(K);
    net.v.resize(K);
    for (int idx = 0; idx < K; ++idx) {
        const int k = picks[idx];
        double rho = -1.0;
        for (int i = 0; i < n; ++i)
            if (i != k) rho = std::max(rho, G(k, i));
        report.rho.push_back(rho);
        const double b = 0.5 * (1.0 + rho);
        const double v = data.y[k] / (1.0 - b);
        // homogeneous rescale applied directly: |v| into w and b
        net.W.row(idx) = std::abs(v) * data.X.row(k);
        net.b[idx] = std::abs(v) * b;
        net.v[idx] = v > 0.0 ? 1.0 : -1.0;
    }
    report.net = std::move(net);

    const Eigen::VectorXd pred = model::forward(report.net, data.X);
    report.max_interp_error = (pred - data.y).cwiseAbs().maxCoeff();

    report.bound_rhs = (with_output_bias ? 1.0 : 0.0) + (data.D * data.D + 2.0) / n;
    report.lambda_max = curvature::lambda_max_tangent_gram(report.net, data);
    report.lambda_max_power =
        curvature::lambda_max(report.net, data, 1e-10, 20000, {2024, 5}).lambda_max;
    return report;
}

OneHotCheck verify_one_hot_activation(const FlatBuildReport& report, const data::Dataset& data) {
    OneHotCheck check;
    const int K = report.net.width();
    check.ok = true;
    check.min_positive_margin = std::numeric_limits<double>::infinity();
    check.max_negative_margin = -std::numeric_limits<double>::infinity();
    if (K == 0) {
        check.min_positive_margin = 0.0;
        check.max_negative_margin = 0.0;
        return check;
    }
    Eigen::MatrixXd Z = data.X * report.net.W.transpose();
    Z.rowwise() -= report.net.b.transpose();
    for (int idx = 0; idx < K; ++idx) {
        const int k = report.sample_of_neuron[idx];
        for (int i = 0; i < data.n(); ++i) {
            const double z = Z(i, idx);
            if (i == k) {
                check.min_positive_margin = std::min(check.min_positive_margin, z);
                if (z <= 0.0) {
                    check.ok = false;
                    check.bad_neuron = idx;
                    check.bad_sample = i;
                }
            } else {
                check.max_negative_margin = std::max(check.max_negative_margin, z);
                if (z >= 0.0) {
                    check.ok = false;
                    check.bad_neuron = idx;
                    check.bad_sample = i;
                }
            }
        }
    }
    return check;
}

void save_report_json(const FlatBuildReport& report, const std::string& path) {
    nlohmann::json j;
    j["width"] = report.width;
    j["rho"] = report.rho;
    j["sample_of_neuron"] = report.sample_of_neuron;
    j["max_interp_error"] = report.max_interp_error;
    j["lambda_max"] = report.lambda_max;
    j["lambda_max_power"] = report.lambda_max_power;
    j["bound_rhs"] = report.bound_rhs;
    j["has_output_bias"] = report.net.has_output_bias;
    std::ofstream out(path);
    if (!out) throw IngestionError("save_report_json: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace geolab::flatnet

#include "geolab/curvature.hpp"

#include <cmath>

namespace geolab::curvature {

using model::Network;

HvpOperator::HvpOperator(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
    : net_(net), X_(X) {
    if (X.rows() == 0) throw ArityError("HvpOperator: empty data");
    if (net.width() > 0 && X.cols() != net.dim())
        throw ArityError("HvpOperator: feature dimension mismatch");
    Z_ = X_ * net_.W.transpose();
    Z_.rowwise() -= net_.b.transpose();
    active_ = (Z_.array() > 0.0).cast<double>();
    kink_warning_ = (Z_.array().abs() < kKinkTol).any();
    Eigen::VectorXd pred = (active_ * Z_.array()).matrix() * net_.v;
    pred.array() += net_.beta;
    r_ = pred - y;
    loss_ = 0.5 * r_.squaredNorm() / double(X.rows());
}

HvpOperator::HvpOperator(const Network& net, const data::Dataset& data)
    : HvpOperator(net, data.X, data.y) {}

Eigen::VectorXd HvpOperator::apply(const Eigen::VectorXd& vec) const {
    const int K = net_.width(), d = net_.dim(), n = static_cast<int>(X_.rows());
    if (vec.size() != param_count()) throw ArityError("hvp: wrong vector length");
    const double inv_n = 1.0 / n;

    Eigen::VectorXd out = Eigen::VectorXd::Zero(vec.size());
    if (K == 0) {
        if (net_.has_output_bias) out[0] = vec[0];  // H = 1 for the lone bias
        return out;
    }

    Eigen::MatrixXd Vw(K, d);
    for (int k = 0; k < K; ++k) Vw.row(k) = vec.segment(k * d, d);
    const Eigen::VectorXd vb = vec.segment(K * d, K);
    const Eigen::VectorXd vv = vec.segment(K * d + K, K);
    const double vbeta = net_.has_output_bias ? vec[K * d + 2 * K] : 0.0;

    // gamma_i = <grad f(x_i), vec> using the per-unit gradient blocks.
    Eigen::MatrixXd XV = X_ * Vw.transpose();  // n x K
    Eigen::ArrayXXd inner = XV.array().rowwise() * net_.v.transpose().array();
    inner.rowwise() -= (net_.v.array() * vb.array()).transpose();
    inner += Z_.array().rowwise() * vv.transpose().array();
    Eigen::VectorXd gamma = (active_ * inner).rowwise().sum().matrix();
    gamma.array() += vbeta;

    // Gauss-Newton part (1/n) sum gamma_i grad f_i plus the residual part
    // through the v-w and v-b cross blocks of the per-sample Hessian of f.
    Eigen::MatrixXd Mw = (((gamma * net_.v.transpose()).array() +
                           (r_ * vv.transpose()).array()) * active_).matrix();  // n x K
    Eigen::MatrixXd out_W = inv_n * (Mw.transpose() * X_);
    Eigen::VectorXd out_b = -inv_n * Mw.colwise().sum().transpose();

    Eigen::ArrayXXd zv = active_ * (Z_.array().colwise() * gamma.array() +
                                    (XV.array().rowwise() - vb.transpose().array()).colwise() *
                                        r_.array());
    Eigen::VectorXd out_v = inv_n * zv.colwise().sum().matrix().transpose();

    for (int k = 0; k < K; ++k) out.segment(k * d, d) = out_W.row(k);
    out.segment(K * d, K) = out_b;
    out.segment(K * d + K, K) = out_v;
    if (net_.has_output_bias) out[K * d + 2 * K] = inv_n * gamma.sum();
    return out;
}

Eigen::VectorXd hvp(const Network& net, const data::Dataset& data, const Eigen::VectorXd& vec) {
    return HvpOperator(net, data).apply(vec);
}

Eigen::MatrixXd tangent_features(const Network& net, const data::Dataset& data) {
    const int K = net.width(), d = net.dim(), n = data.n();
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(net.param_count(), n);
    if (K > 0) {
        Eigen::MatrixXd Z = data.X * net.W.transpose();
        Z.rowwise() -= net.b.transpose();
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) {
                if (Z(i, k) > 0.0) {
                    Phi.col(i).segment(k * d, d) = net.v[k] * data.X.row(i);
                    Phi(K * d + k, i) = -net.v[k];
                    Phi(K * d + K + k, i) = Z(i, k);
                }
            }
        }
    }
    if (net.has_output_bias) Phi.row(net.param_count() - 1).setOnes();
    return Phi;
}

CurvatureReport lambda_max(const Network& net, const data::Dataset& data, double tol,
                           int max_iter, numerics::SeedSpec seed, std::optional<double> eta) {
    CurvatureReport report;
    report.method = Method::PowerHvp;
    const int p = net.param_count();
    if (p == 0) {
        report.lambda_max = 0.0;
        if (eta) {
            report.two_over_eta = 2.0 / *eta;
            report.beos = true;
        }
        return report;
    }

    HvpOperator op(net, data);
    report.kink_warning = op.kink_warning();
    const auto matvec = [&](const Eigen::VectorXd& x) { return op.apply(x); };

    // Pass 1: unshifted. Converges to the eigenvalue of largest magnitude;
    // its size bounds |lambda_min|, which is all the shift has to cover.
    auto pass1 = numerics::power_iteration(matvec, p, tol, max_iter, seed.stream(11));
    report.iterations = pass1.iterations;

    const bool near_interpolation = op.loss() <= 1e-14 * (1.0 + data.D * data.D);
    if (near_interpolation && pass1.value >= 0.0) {
        // PSD regime: the unshifted estimate is the operator norm.
        report.lambda_max = pass1.value;
        report.converged = pass1.converged;
    } else {
        // Indefinite-safe: power iteration on H + cI, c just above the
        // spectral radius estimate, then subtract the shift.
        const double c = 1.02 * std::abs(pass1.value) + 1e-8;
        report.shift_used = c;
        const auto shifted = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return op.apply(x) + c * x;
        };
        auto pass2 = numerics::power_iteration(shifted, p, tol, max_iter, seed.stream(12));
        report.lambda_max = pass2.value - c;
        report.iterations += pass2.iterations;
        report.converged = pass2.converged;
    }

    if (eta) {
        report.two_over_eta = 2.0 / *eta;
        report.beos = report.lambda_max <= *report.two_over_eta;
    }
    return report;
}

Eigen::MatrixXd dense_hessian(const Network& net, const data::Dataset& data, int max_params) {
    const int p = net.param_count();
    if (p > max_params)
        throw ArityError("dense_hessian: parameter count " + std::to_string(p) +
                         " exceeds cap " + std::to_string(max_params));
    const int K = net.width(), d = net.dim(), n = data.n();
    const double inv_n = 1.0 / n;

    Eigen::MatrixXd Phi = tangent_features(net, data);
    Eigen::MatrixXd H = inv_n * (Phi * Phi.transpose());
    if (K == 0) return H;

    // Residual term: only the v-w and v-b cross blocks of the per-sample
    // Hessian of f survive (the ReLU second derivative is taken as 0).
    Eigen::MatrixXd Z = data.X * net.W.transpose();
    Z.rowwise() -= net.b.transpose();
    Eigen::VectorXd r = (Z.cwiseMax(0.0)) * net.v;
    r.array() += net.beta;
    r -= data.y;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) {
            if (Z(i, k) > 0.0) {
                const double w = inv_n * r[i];
                const int vk = K * d + K + k;
                for (int c = 0; c < d; ++c) {
                    H(k * d + c, vk) += w * data.X(i, c);
                    H(vk, k * d + c) += w * data.X(i, c);
                }
                H(K * d + k, vk) += -w;
                H(vk, K * d + k) += -w;
            }
        }
    }
    return H;
}

double lambda_max_tangent_gram(const Network& net, const data::Dataset& data) {
    Eigen::MatrixXd Phi = tangent_features(net, data);
    Eigen::MatrixXd G = (Phi.transpose() * Phi) / double(data.n());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

}  // namespace geolab::curvature

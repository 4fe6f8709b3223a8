#pragma once

// Explicit width-<=n interpolating network for sphere-supported data whose
// Hessian operator norm is 1 + (D^2+2)/n (or (D^2+2)/n without the output
// bias), plus verification of its one-hot activation pattern.

#include <string>
#include <vector>

#include "geolab/data.hpp"
#include "geolab/model.hpp"

namespace geolab::flatnet {

struct FlatBuildReport {
    model::Network net;          // homogeneously rescaled, |v_k| = 1
    int width = 0;               // count of nonzero-label samples
    std::vector<double> rho;     // per kept neuron: max_{i != k} x_i . x_k
    std::vector<int> sample_of_neuron;  // dataset row index per neuron
    double max_interp_error = 0.0;
    double lambda_max = 0.0;     // exact, via the tangent-feature Gram matrix
    double lambda_max_power = 0.0;  // power iteration on the HVP
    double bound_rhs = 0.0;      // 1 + (D^2+2)/n, or (D^2+2)/n without bias
};

// One neuron per nonzero label: w_k = x_k, b_k = (1+rho_k)/2,
// v_k = y_k/(1-b_k), followed by the homogeneous rescale to |v_k| = 1.
// Inputs must be unit vectors (within 1e-9) and pairwise distinct.
FlatBuildReport build_flat_interpolator(const data::Dataset& data, bool with_output_bias);

struct OneHotCheck {
    bool ok = false;
    double min_positive_margin = 0.0;  // min_k z_kk
    double max_negative_margin = 0.0;  // max_{i != k} z_ik (should be < 0)
    int bad_neuron = -1;
    int bad_sample = -1;
};

// Asserts z_kk > 0 and z_ik < 0 for i != k on the construction.
OneHotCheck verify_one_hot_activation(const FlatBuildReport& report, const data::Dataset& data);

void save_report_json(const FlatBuildReport& report, const std::string& path);

}  // namespace geolab::flatnet

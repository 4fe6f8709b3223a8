#include "geolab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace geolab::data {

using numerics::Rng;
using numerics::SeedSpec;

namespace {
// Stream roles so that feature/label/teacher draws never share a stream.
constexpr std::uint64_t kStreamFeatures = 101;
constexpr std::uint64_t kStreamLabels = 102;
constexpr std::uint64_t kStreamSubspaces = 103;
constexpr std::uint64_t kStreamOffsets = 104;
}  // namespace

void Dataset::recompute_bounds() {
    R = 0.0;
    for (int i = 0; i < n(); ++i) R = std::max(R, X.row(i).norm());
    D = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
}

void DistSpec::validate() const {
    if (d < 1) throw SpecError("DistSpec: d must be >= 1");
    switch (kind) {
        case Kind::BetaRadial:
            if (!(alpha > 0.0)) throw SpecError("BetaRadial: alpha must be > 0");
            break;
        case Kind::MixtureBalls: {
            if (m < 1 || J < 1) throw SpecError("MixtureBalls: m, J must be >= 1");
            if (m > d) throw SpecError("MixtureBalls: m must not exceed d");
            if (!mix_probs.empty()) {
                if (static_cast<int>(mix_probs.size()) != J)
                    throw SpecError("MixtureBalls: mix_probs size must equal J");
                double sum = 0.0;
                for (double p : mix_probs) {
                    if (!(p > 0.0)) throw SpecError("MixtureBalls: probabilities must be positive");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw SpecError("MixtureBalls: probabilities must sum to 1");
            }
            break;
        }
        default:
            break;
    }
}

std::vector<double> DistSpec::probs() const {
    if (!mix_probs.empty()) return mix_probs;
    return std::vector<double>(J, 1.0 / J);
}

DistSpec DistSpec::beta_radial(int d, double alpha) {
    DistSpec s;
    s.kind = Kind::BetaRadial;
    s.d = d;
    s.alpha = alpha;
    s.validate();
    return s;
}

DistSpec DistSpec::mixture_balls(int d, int m, int J, std::uint64_t subspace_seed,
                                 std::vector<double> probs, bool affine) {
    DistSpec s;
    s.kind = Kind::MixtureBalls;
    s.d = d;
    s.m = m;
    s.J = J;
    s.subspace_seed = subspace_seed;
    s.mix_probs = std::move(probs);
    s.affine_offsets = affine;
    s.validate();
    return s;
}

DistSpec DistSpec::sphere(int d) {
    DistSpec s;
    s.kind = Kind::Sphere;
    s.d = d;
    return s;
}

DistSpec DistSpec::ball(int d) {
    DistSpec s;
    s.kind = Kind::Ball;
    s.d = d;
    return s;
}

DistSpec DistSpec::gaussian(int d) {
    DistSpec s;
    s.kind = Kind::Gaussian;
    s.d = d;
    return s;
}

std::vector<Eigen::MatrixXd> mixture_subspaces(const DistSpec& spec) {
    spec.validate();
    if (spec.kind != DistSpec::Kind::MixtureBalls)
        throw SpecError("mixture_subspaces: spec is not MixtureBalls");
    Rng rng(SeedSpec{spec.subspace_seed, kStreamSubspaces});
    std::vector<Eigen::MatrixXd> bases;
    bases.reserve(spec.J);
    for (int j = 0; j < spec.J; ++j) {
        Eigen::MatrixXd G(spec.d, spec.m);
        for (int c = 0; c < spec.m; ++c) G.col(c) = rng.gaussian_vector(spec.d);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(spec.d, spec.m);
        // Fix column signs so the basis is a pure function of the seed.
        Eigen::MatrixXd Rfac = qr.matrixQR().topRows(spec.m).triangularView<Eigen::Upper>();
        for (int c = 0; c < spec.m; ++c)
            if (Rfac(c, c) < 0.0) Q.col(c) = -Q.col(c);
        bases.push_back(std::move(Q));
    }
    return bases;
}

std::vector<Eigen::VectorXd> mixture_offsets(const DistSpec& spec) {
    spec.validate();
    if (spec.kind != DistSpec::Kind::MixtureBalls)
        throw SpecError("mixture_offsets: spec is not MixtureBalls");
    std::vector<Eigen::VectorXd> offsets(spec.J, Eigen::VectorXd::Zero(spec.d));
    if (!spec.affine_offsets) return offsets;
    Rng rng(SeedSpec{spec.subspace_seed, kStreamOffsets});
    for (int j = 0; j < spec.J; ++j) offsets[j] = 0.5 * rng.in_ball(spec.d);
    return offsets;
}

namespace {

// Beta(1, alpha) radius through the radial profile h(r) = 1 - (1-r)^(1/alpha).
double beta_radial_radius(Rng& rng, double alpha) {
    return 1.0 - std::pow(1.0 - rng.uniform01(), 1.0 / alpha);
}

Eigen::VectorXd mixture_point(Rng& rng, const DistSpec& spec,
                              const Eigen::MatrixXd& basis, const Eigen::VectorXd& offset) {
    for (;;) {
        Eigen::VectorXd x = basis * rng.in_ball(spec.m) + offset;
        if (!spec.affine_offsets || x.norm() <= 1.0) return x;
    }
}

}  // namespace

Dataset sample_features(const DistSpec& spec, int n, SeedSpec seed) {
    spec.validate();
    if (n < 1) throw ArityError("sample_features: n must be >= 1");
    Rng rng(seed.stream(kStreamFeatures));
    Dataset ds;
    ds.X.resize(n, spec.d);

    switch (spec.kind) {
        case DistSpec::Kind::BetaRadial:
            for (int i = 0; i < n; ++i)
                ds.X.row(i) = beta_radial_radius(rng, spec.alpha) * rng.on_sphere(spec.d);
            break;
        case DistSpec::Kind::Sphere:
            for (int i = 0; i < n; ++i) ds.X.row(i) = rng.on_sphere(spec.d);
            break;
        case DistSpec::Kind::Ball:
            for (int i = 0; i < n; ++i) ds.X.row(i) = rng.in_ball(spec.d);
            break;
        case DistSpec::Kind::Gaussian:
            for (int i = 0; i < n; ++i) ds.X.row(i) = rng.gaussian_vector(spec.d);
            break;
        case DistSpec::Kind::MixtureBalls: {
            const auto bases = mixture_subspaces(spec);
            const auto offsets = mixture_offsets(spec);
            const auto p = spec.probs();
            std::vector<int> comp(n);
            for (int i = 0; i < n; ++i) {
                const int j = static_cast<int>(rng.categorical(p));
                comp[i] = j;
                ds.X.row(i) = mixture_point(rng, spec, bases[j], offsets[j]);
            }
            ds.component = std::move(comp);
            break;
        }
    }
    ds.y.resize(0);
    ds.recompute_bounds();
    return ds;
}

Dataset sample_features_component(const DistSpec& spec, int component, int n,
                                  SeedSpec seed) {
    spec.validate();
    if (spec.kind != DistSpec::Kind::MixtureBalls)
        throw SpecError("sample_features_component: spec is not MixtureBalls");
    if (component < 0 || component >= spec.J)
        throw SpecError("sample_features_component: component out of range");
    if (n < 1) throw ArityError("sample_features_component: n must be >= 1");

    const auto basis = mixture_subspaces(spec)[component];
    const auto offset = mixture_offsets(spec)[component];
    Rng rng(seed.stream(kStreamFeatures));
    Dataset ds;
    ds.X.resize(n, spec.d);
    for (int i = 0; i < n; ++i) ds.X.row(i) = mixture_point(rng, spec, basis, offset);
    ds.component = std::vector<int>(n, component);
    ds.y.resize(0);
    ds.recompute_bounds();
    return ds;
}

TeacherSpec TeacherSpec::random_quadratic(int d, double noise_sigma, SeedSpec seed) {
    Rng rng(seed.stream(kStreamLabels).stream(1));
    Eigen::MatrixXd G(d, d);
    for (int j = 0; j < d; ++j) G.col(j) = rng.gaussian_vector(d);
    TeacherSpec t;
    t.kind = Kind::Quadratic;
    t.A = 0.5 * (G + G.transpose()) / std::sqrt(double(d));
    t.b = rng.gaussian_vector(d) / std::sqrt(double(d));
    t.c = 0.0;
    t.noise_sigma = noise_sigma;
    return t;
}

TeacherSpec TeacherSpec::random_relu(int d, int width, double noise_sigma, SeedSpec seed) {
    TeacherSpec t;
    t.kind = Kind::ReluNet;
    t.relu = model::init_network(d, width, 1.0, true, seed.stream(kStreamLabels).stream(2));
    // Rescale output weights so teacher values are O(1) on the unit ball.
    t.relu.v *= std::sqrt(double(width));
    t.noise_sigma = noise_sigma;
    return t;
}

TeacherSpec TeacherSpec::quadratic(Eigen::MatrixXd A, Eigen::VectorXd b, double c,
                                   double noise_sigma) {
    TeacherSpec t;
    t.kind = Kind::Quadratic;
    t.A = std::move(A);
    t.b = std::move(b);
    t.c = c;
    t.noise_sigma = noise_sigma;
    return t;
}

Eigen::VectorXd TeacherSpec::evaluate(const Eigen::MatrixXd& X) const {
    if (kind == Kind::ReluNet) return model::forward(relu, X);
    if (A.rows() != X.cols() || b.size() != X.cols())
        throw SpecError("TeacherSpec: quadratic coefficient dimensions do not match data");
    Eigen::MatrixXd AX = X * A.transpose();
    Eigen::VectorXd out(X.rows());
    for (int i = 0; i < X.rows(); ++i) out[i] = X.row(i).dot(AX.row(i));
    out += X * b;
    out.array() += c;
    return out;
}

void gen_labels(const TeacherSpec& teacher, Dataset& data, SeedSpec seed) {
    if (!data.X.allFinite()) throw NumericError("gen_labels: non-finite features");
    if (!(teacher.noise_sigma >= 0.0)) throw SpecError("gen_labels: noise_sigma must be >= 0");
    Eigen::VectorXd clean = teacher.evaluate(data.X);
    Eigen::VectorXd noisy = clean;
    if (teacher.noise_sigma > 0.0) {
        Rng rng(seed.stream(kStreamLabels));
        for (int i = 0; i < noisy.size(); ++i) noisy[i] += teacher.noise_sigma * rng.normal();
    }
    data.clean_labels = std::move(clean);
    data.y = std::move(noisy);
    data.recompute_bounds();
}

Dataset make_dataset(const DistSpec& dist, const TeacherSpec& teacher, int n, SeedSpec seed) {
    Dataset ds = sample_features(dist, n, seed);
    gen_labels(teacher, ds, seed);
    return ds;
}

namespace {

bool parse_double(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, int label_column,
                         std::optional<double> normalize_scale) {
    std::ifstream in(path);
    if (!in) throw IngestionError("load_csv_dataset: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    std::size_t width = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        std::vector<double> vals(cells.size());
        bool all_numeric = true;
        long bad_col = -1;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], vals[c])) {
                all_numeric = false;
                bad_col = static_cast<long>(c);
                break;
            }
            if (!std::isfinite(vals[c])) {
                throw IngestionError("load_csv_dataset: non-finite value at row " +
                                         std::to_string(lineno) + ", column " +
                                         std::to_string(c),
                                     lineno, static_cast<long>(c));
            }
        }
        if (!all_numeric) {
            if (first_data_row) continue;  // header row
            throw IngestionError("load_csv_dataset: cannot parse cell at row " +
                                     std::to_string(lineno) + ", column " +
                                     std::to_string(bad_col),
                                 lineno, bad_col);
        }
        if (first_data_row) {
            width = vals.size();
            first_data_row = false;
        } else if (vals.size() != width) {
            throw IngestionError("load_csv_dataset: ragged row " + std::to_string(lineno) +
                                     " (expected " + std::to_string(width) + " cells, got " +
                                     std::to_string(vals.size()) + ")",
                                 lineno);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw IngestionError("load_csv_dataset: no data rows in " + path);
    if (label_column < 0 || static_cast<std::size_t>(label_column) >= width)
        throw IngestionError("load_csv_dataset: label column out of range");

    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(width) - 1;
    if (d < 1) throw IngestionError("load_csv_dataset: no feature columns");
    Dataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    const double scale = normalize_scale.value_or(1.0);
    for (int i = 0; i < n; ++i) {
        int fc = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<int>(c) == label_column) {
                ds.y[i] = rows[i][c];
            } else {
                ds.X(i, fc++) = rows[i][c] * scale;
            }
        }
    }
    ds.recompute_bounds();
    return ds;
}

}  // namespace geolab::data

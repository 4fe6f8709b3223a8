#include "geolab/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace geolab::depth {

using numerics::Rng;
using numerics::SeedSpec;

namespace {

constexpr int kDataDirectionCap = 5000;

// Shared candidate-direction machinery: projections of the whole dataset on
// every candidate are computed once and sorted, so each query costs one
// binary search per direction. The raw projection matrix is kept so rows
// that coincide with the query point can be counted exactly; the query
// level is evaluated by a different kernel than the batched projections and
// can land one ulp off, which would otherwise flip ties.
struct DepthIndex {
    Eigen::MatrixXd dirs;                    // C x d
    Eigen::MatrixXd P;                       // n x C raw projections
    std::vector<std::vector<double>> sorted; // per direction, ascending

    DepthIndex(const data::Dataset& data, int n_directions, SeedSpec seed) {
        const int d = data.dim();
        Rng rng(seed.stream(81));
        std::vector<Eigen::VectorXd> cand;
        for (int k = 0; k < n_directions; ++k) cand.push_back(rng.on_sphere(d));
        if (data.n() <= kDataDirectionCap) {
            for (int i = 0; i < data.n(); ++i) {
                const double rn = data.X.row(i).norm();
                if (rn > 0.0) cand.push_back(data.X.row(i).transpose() / rn);
            }
        }
        dirs.resize(static_cast<int>(cand.size()), d);
        for (std::size_t c = 0; c < cand.size(); ++c) dirs.row(static_cast<int>(c)) = cand[c];

        P = data.X * dirs.transpose();  // n x C
        sorted.resize(cand.size());
        for (std::size_t c = 0; c < cand.size(); ++c) {
            sorted[c].assign(P.col(static_cast<int>(c)).data(),
                             P.col(static_cast<int>(c)).data() + data.n());
            std::sort(sorted[c].begin(), sorted[c].end());
        }
    }

    // #{i : proj_i >= level} via the sorted column.
    [[nodiscard]] int count_at_least(std::size_t c, double level) const {
        const auto& col = sorted[c];
        return static_cast<int>(col.end() - std::lower_bound(col.begin(), col.end(), level));
    }
};

int count_at_least_direct(const Eigen::VectorXd& proj, double level) {
    int count = 0;
    for (int i = 0; i < proj.size(); ++i)
        if (proj[i] >= level) ++count;
    return count;
}

// Rows equal to x are mathematical ties (u.x_i = u.x for every u): they
// always satisfy the >= count when include_self and never count otherwise.
int adjust_self(int raw_count, const std::vector<int>& self_rows, bool include_self,
                const std::function<double(int)>& stored, double level) {
    int included = 0;
    for (int i : self_rows)
        if (stored(i) >= level) ++included;
    return raw_count - included + (include_self ? static_cast<int>(self_rows.size()) : 0);
}

double query_depth(const DepthIndex& index, const data::Dataset& data, const Eigen::VectorXd& x,
                   bool include_self) {
    const int n = data.n();
    std::vector<int> self_rows;
    for (int i = 0; i < n; ++i)
        if (data.X.row(i).transpose() == x) self_rows.push_back(i);

    int best = n;
    for (std::size_t c = 0; c < index.sorted.size(); ++c) {
        const double level = index.dirs.row(static_cast<int>(c)).dot(x);
        int count = index.count_at_least(c, level);
        if (!self_rows.empty())
            count = adjust_self(count, self_rows, include_self,
                                [&](int i) { return index.P(i, static_cast<int>(c)); }, level);
        best = std::min(best, count);
        if (best == 0) break;
    }
    // Per-query candidates +x/||x|| and -x/||x||.
    const double xnorm = x.norm();
    if (xnorm > 0.0) {
        const Eigen::VectorXd proj = data.X * (x / xnorm);
        for (int sign = 0; sign < 2; ++sign) {
            const double level = sign == 0 ? xnorm : -xnorm;
            const Eigen::VectorXd signed_proj = sign == 0 ? proj : Eigen::VectorXd(-proj);
            int count = count_at_least_direct(signed_proj, level);
            if (!self_rows.empty())
                count = adjust_self(count, self_rows, include_self,
                                    [&](int i) { return signed_proj[i]; }, level);
            best = std::min(best, count);
        }
    }
    return double(std::max(best, 0)) / double(n);
}

}  // namespace

double tukey_depth_approx(const Eigen::VectorXd& x, const data::Dataset& data,
                          int n_directions, SeedSpec seed, bool include_self) {
    if (n_directions < 1) throw ArityError("tukey_depth_approx: n_directions must be >= 1");
    if (data.n() == 0) throw ArityError("tukey_depth_approx: empty dataset");
    if (x.size() != data.dim()) throw ArityError("tukey_depth_approx: dimension mismatch");
    const DepthIndex index(data, n_directions, seed);
    return query_depth(index, data, x, include_self);
}

DepthReport depth_error_scan(const model::Network& net, const data::Dataset& data,
                             int n_directions, SeedSpec seed) {
    if (!data.clean_labels) throw SpecError("depth_error_scan: clean labels required");
    if (n_directions < 1) throw ArityError("depth_error_scan: n_directions must be >= 1");
    DepthReport report;
    report.n_directions = n_directions;
    report.seed = seed.master_seed;

    const DepthIndex index(data, n_directions, seed);
    const Eigen::VectorXd pred = model::forward(net, data.X);
    report.points.resize(data.n());
    for (int i = 0; i < data.n(); ++i) {
        DepthPoint pt;
        pt.index = i;
        pt.depth = query_depth(index, data, data.X.row(i).transpose(), true);
        const double r = pred[i] - (*data.clean_labels)[i];
        pt.error = r * r;
        report.points[i] = pt;
    }

    std::vector<double> depths, errors;
    for (const auto& pt : report.points) {
        depths.push_back(pt.depth);
        errors.push_back(pt.error);
    }
    report.spearman = numerics::spearman(depths, errors);

    // Quintiles by depth rank (1 = shallowest fifth).
    std::vector<int> order(data.n());
    for (int i = 0; i < data.n(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return report.points[a].depth < report.points[b].depth;
    });
    const int n = data.n();
    for (int q = 0; q < 5; ++q) {
        const int lo = q * n / 5;
        const int hi = (q + 1) * n / 5;
        if (hi <= lo) continue;
        QuintileRow row;
        row.quintile = q + 1;
        row.count = hi - lo;
        row.depth_lo = report.points[order[lo]].depth;
        row.depth_hi = report.points[order[hi - 1]].depth;
        std::vector<double> errs;
        double acc = 0.0;
        for (int i = lo; i < hi; ++i) {
            errs.push_back(report.points[order[i]].error);
            acc += errs.back();
        }
        row.mean_error = acc / row.count;
        std::sort(errs.begin(), errs.end());
        row.median_error = errs.size() % 2 == 1
                               ? errs[errs.size() / 2]
                               : 0.5 * (errs[errs.size() / 2 - 1] + errs[errs.size() / 2]);
        report.quintiles.push_back(row);
    }
    return report;
}

namespace {
std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace

void save_scatter_csv(const DepthReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("save_scatter_csv: cannot write " + path);
    out << "index,depth,error\n";
    for (const auto& pt : report.points)
        out << pt.index << ',' << fmt(pt.depth) << ',' << fmt(pt.error) << '\n';
}

void save_quintiles_csv(const DepthReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("save_quintiles_csv: cannot write " + path);
    out << "quintile,depth_lo,depth_hi,mean_error,median_error,count\n";
    for (const auto& q : report.quintiles)
        out << q.quintile << ',' << fmt(q.depth_lo) << ',' << fmt(q.depth_hi) << ','
            << fmt(q.mean_error) << ',' << fmt(q.median_error) << ',' << q.count << '\n';
}

}  // namespace geolab::depth

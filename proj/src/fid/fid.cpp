#include "fgb/fid/fid.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "fgb/error.hpp"

namespace fgb::fid {

namespace {

// Imaginary residue on the root's diagonal above this is treated as a sign
// that the product was numerically singular.
constexpr double kImagTolerance = 1e-3;

bool all_finite(const Eigen::MatrixXcd& m) {
    return m.real().allFinite() && m.imag().allFinite();
}

}  // namespace

void to_json(nlohmann::json& j, const FidResult& r) {
    j = {{"value", r.value},
         {"mean_term", r.mean_term},
         {"trace_term", r.trace_term},
         {"stabilization_eps_used", r.stabilization_eps_used},
         {"n_a", r.n_a},
         {"n_b", r.n_b},
         {"warnings", r.warnings}};
}

void from_json(const nlohmann::json& j, FidResult& r) {
    r.value = j.at("value").get<double>();
    r.mean_term = j.at("mean_term").get<double>();
    r.trace_term = j.at("trace_term").get<double>();
    r.stabilization_eps_used = j.value("stabilization_eps_used", 0.0);
    r.n_a = j.value("n_a", std::int64_t{0});
    r.n_b = j.value("n_b", std::int64_t{0});
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

FidStats gaussian_stats(const Eigen::MatrixXd& features) {
    const auto n = features.rows();
    if (n < 2) fail(ErrorCode::InsufficientSamples, "need at least 2 feature rows, got " + std::to_string(n));
    if (!features.allFinite()) fail(ErrorCode::NumericalError, "non-finite feature values");
    FidStats s;
    s.n = n;
    s.mu = features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
    s.sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
    s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
    return s;
}

Eigen::MatrixXcd sqrtm(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) fail(ErrorCode::UsageError, "sqrtm needs a square matrix");
    const auto n = a.rows();
    if (n == 0) return Eigen::MatrixXcd(0, 0);
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
    const Eigen::MatrixXcd& t = schur.matrixT();
    const Eigen::MatrixXcd& u = schur.matrixU();

    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        r(j, j) = std::sqrt(t(j, j));
        for (Eigen::Index i = j - 1; i >= 0; --i) {
            std::complex<double> s = t(i, j);
            for (Eigen::Index k = i + 1; k < j; ++k) s -= r(i, k) * r(k, j);
            r(i, j) = s / (r(i, i) + r(j, j));
        }
    }
    return u * r * u.adjoint();
}

FidResult frechet_distance(const FidStats& a, const FidStats& b, double eps) {
    if (a.mu.size() != b.mu.size() || a.sigma.rows() != b.sigma.rows() || a.sigma.rows() != a.mu.size()) {
        fail(ErrorCode::UsageError, "feature dimensions differ");
    }
    if (!a.mu.allFinite() || !b.mu.allFinite() || !a.sigma.allFinite() || !b.sigma.allFinite()) {
        fail(ErrorCode::NumericalError, "non-finite Gaussian statistics");
    }
    FidResult r;
    r.n_a = a.n;
    r.n_b = b.n;
    r.mean_term = (a.mu - b.mu).squaredNorm();

    Eigen::MatrixXcd root = sqrtm(a.sigma * b.sigma);
    const auto d = a.mu.size();
    const bool bad = !all_finite(root) || root.diagonal().imag().cwiseAbs().maxCoeff() > kImagTolerance;
    if (bad) {
        const Eigen::MatrixXd offset = eps * Eigen::MatrixXd::Identity(d, d);
        root = sqrtm((a.sigma + offset) * (b.sigma + offset));
        r.stabilization_eps_used = eps;
        if (!all_finite(root)) fail(ErrorCode::NumericalError, "matrix square root did not converge");
    }
    const double tr_root = root.trace().real();
    r.trace_term = a.sigma.trace() + b.sigma.trace() - 2.0 * tr_root;
    r.value = r.mean_term + r.trace_term;
    if (r.value < 0.0 && r.value > -1e-6) {
        r.value = 0.0;
    } else if (r.value < 0.0) {
        r.warnings.push_back("negative distance " + std::to_string(r.value) + " before clamping");
        r.value = 0.0;
    }
    return r;
}

}  // namespace fgb::fid

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace fgb::fid {

struct FidStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    std::int64_t n = 0;
};

struct FidResult {
    double value = 0.0;
    double mean_term = 0.0;   // ||mu_a - mu_b||^2
    double trace_term = 0.0;  // Tr(S_a + S_b - 2 (S_a S_b)^1/2)
    double stabilization_eps_used = 0.0;
    std::int64_t n_a = 0;
    std::int64_t n_b = 0;
    std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const FidResult& r);
void from_json(const nlohmann::json& j, FidResult& r);

/// Column mean and unbiased (n - 1) covariance of an n x d feature matrix.
FidStats gaussian_stats(const Eigen::MatrixXd& features);

/// Principal square root of a general real matrix through a complex Schur
/// form T = U R U^*, with the upper-triangular root built column by column.
/// Entries may be non-finite when T has repeated zero eigenvalues.
Eigen::MatrixXcd sqrtm(const Eigen::MatrixXd& a);

FidResult frechet_distance(const FidStats& a, const FidStats& b, double eps = 1e-6);

}  // namespace fgb::fid

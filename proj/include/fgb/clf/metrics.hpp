#pragma once

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

namespace fgb::clf {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// confusion[true][predicted], index 0 = AMD (positive), 1 = NON_AMD.
struct ClassifierMetrics {
    std::array<std::array<std::int64_t, 2>, 2> confusion{};
    double acc = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::array<ClassScores, 2> per_class{};

    std::int64_t total() const;

    /// Ratios with an empty denominator are reported as 0.
    static ClassifierMetrics from_confusion(const std::array<std::array<std::int64_t, 2>, 2>& confusion);
};

void to_json(nlohmann::json& j, const ClassifierMetrics& m);

/// Half-up rounding to `digits` decimals.
double round_to(double value, int digits);

}  // namespace fgb::clf

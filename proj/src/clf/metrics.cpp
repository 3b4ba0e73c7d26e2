#include "fgb/clf/metrics.hpp"

#include <cmath>

namespace fgb::clf {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::int64_t ClassifierMetrics::total() const {
    return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
}

ClassifierMetrics ClassifierMetrics::from_confusion(const std::array<std::array<std::int64_t, 2>, 2>& c) {
    ClassifierMetrics m;
    m.confusion = c;
    const auto tp = c[0][0], fn = c[0][1], fp = c[1][0], tn = c[1][1];
    m.acc = ratio(tp + tn, m.total());
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    for (int k = 0; k < 2; ++k) {
        auto& s = m.per_class[static_cast<std::size_t>(k)];
        const auto hit = c[k][k];
        s.precision = ratio(hit, c[0][k] + c[1][k]);
        s.recall = ratio(hit, c[k][0] + c[k][1]);
        s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
    }
    return m;
}

void to_json(nlohmann::json& j, const ClassifierMetrics& m) {
    const auto scores = [](const ClassScores& s) {
        return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
    };
    j = {{"confusion", m.confusion},  {"acc", m.acc},
         {"sensitivity", m.sensitivity}, {"specificity", m.specificity},
         {"AMD", scores(m.per_class[0])}, {"NON_AMD", scores(m.per_class[1])}};
}

double round_to(double value, int digits) {
    const double scale = std::pow(10.0, digits);
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

}  // namespace fgb::clf

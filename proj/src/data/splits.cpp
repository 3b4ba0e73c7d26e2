#include "fgb/data/splits.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fgb/error.hpp"
#include "fgb/rng.hpp"

namespace fgb::data {

DatasetManifest filter_by_grade(const DatasetManifest& manifest) {
    DatasetManifest out;
    out.seed = manifest.seed;
    for (const auto& r : manifest.records) {
        if (r.grade != Grade::Reject) out.records.push_back(r);
    }
    out.recount();
    return out;
}

namespace {

// Largest-remainder apportionment of `total` over `sizes`.
std::vector<int> apportion(const std::vector<int>& sizes, int total) {
    long long sum = 0;
    for (int s : sizes) sum += s;
    std::vector<int> quota(sizes.size(), 0);
    if (sum == 0) return quota;
    std::vector<std::pair<long long, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const long long num = static_cast<long long>(total) * sizes[i];
        quota[i] = static_cast<int>(num / sum);
        assigned += quota[i];
        remainders.emplace_back(num % sum, i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k) {
        const auto i = remainders[k].second;
        if (quota[i] < sizes[i]) {
            ++quota[i];
            ++assigned;
        }
    }
    return quota;
}

}  // namespace

DatasetManifest build_splits(std::span<const DatasetManifest> manifests, std::uint64_t seed,
                             const SplitOptions& options) {
    if (options.test_per_class < 0) fail(ErrorCode::UsageError, "test_per_class must be non-negative");

    std::vector<ImageRecord> records;
    std::set<std::string> ids;
    for (const auto& m : manifests) {
        for (const auto& r : m.records) {
            if (!ids.insert(r.id).second) fail(ErrorCode::ManifestError, "duplicate record id " + r.id);
            if (r.grade == Grade::Reject) continue;
            records.push_back(r);
            records.back().split = Split::Train;
        }
    }
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    Rng rng(seed);
    for (Label label : kLabels) {
        // Group eligible indices by source dataset, in enum order.
        std::map<SourceDataset, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].label == label) groups[records[i].source_dataset].push_back(i);
        }
        int available = 0;
        std::vector<int> sizes;
        for (const auto& [src, idx] : groups) {
            sizes.push_back(static_cast<int>(idx.size()));
            available += static_cast<int>(idx.size());
        }
        if (available < options.test_per_class) {
            fail(ErrorCode::InsufficientMinorityClass,
                 "only " + std::to_string(available) + " eligible " + std::string(fgb::to_string(label)) +
                     " images for a test quota of " + std::to_string(options.test_per_class));
        }
        const auto quota = apportion(sizes, options.test_per_class);
        std::size_t g = 0;
        for (auto& [src, idx] : groups) {
            rng.shuffle(std::span<std::size_t>(idx));
            for (int k = 0; k < quota[g]; ++k) records[idx[k]].split = Split::Test;
            ++g;
        }
    }

    DatasetManifest out;
    out.records = std::move(records);
    out.seed = seed;
    out.recount();
    return out;
}

}  // namespace fgb::data

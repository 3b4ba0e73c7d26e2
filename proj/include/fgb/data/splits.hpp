#pragma once

#include <cstdint>
#include <span>

#include "fgb/data/records.hpp"

namespace fgb::data {

struct SplitOptions {
    int test_per_class = 105;
};

/// Merges manifests, drops REJECT records and holds out a balanced TEST
/// set. Each class's quota is spread over source datasets in proportion to
/// their eligible counts (largest remainder); everything else is TRAIN.
/// Output depends only on the records and the seed, not on input order.
DatasetManifest build_splits(std::span<const DatasetManifest> manifests, std::uint64_t seed,
                             const SplitOptions& options = {});

/// Removes REJECT records and refreshes the counts table.
DatasetManifest filter_by_grade(const DatasetManifest& manifest);

}  // namespace fgb::data

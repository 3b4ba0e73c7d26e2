#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

#include "fgb/data/records.hpp"

namespace fgb::data {

// Images of one split decoded into memory, in manifest order.
struct LabeledImages {
    torch::Tensor images;  // [N,3,S,S] float in [-1,1], RGB
    torch::Tensor labels;  // [N] int64, Label index
    std::vector<std::string> ids;

    std::int64_t size() const { return images.defined() ? images.size(0) : 0; }
};

LabeledImages load_split(const DatasetManifest& manifest, Split split, int size);

}  // namespace fgb::data

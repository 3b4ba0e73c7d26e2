#include "fgb/data/loader.hpp"

#include "fgb/image.hpp"

namespace fgb::data {

LabeledImages load_split(const DatasetManifest& manifest, Split split, int size) {
    std::vector<torch::Tensor> images;
    std::vector<std::int64_t> labels;
    LabeledImages out;
    for (const auto& r : manifest.records) {
        if (r.split != split) continue;
        images.push_back(image::to_tensor(image::read(r.path), size));
        labels.push_back(index_of(r.label));
        out.ids.push_back(r.id);
    }
    out.images = images.empty() ? torch::empty({0, 3, size, size}) : torch::stack(images);
    out.labels = torch::tensor(labels, torch::kInt64);
    return out;
}

}  // namespace fgb::data

#include "fgb/label.hpp"

#include <string>

#include "fgb/error.hpp"

namespace fgb {

std::string_view to_string(Label label) noexcept {
    return label == Label::Amd ? "AMD" : "NON_AMD";
}

Label parse_label(std::string_view text) {
    if (text == "AMD") return Label::Amd;
    if (text == "NON_AMD") return Label::NonAmd;
    fail(ErrorCode::ManifestError, "unknown label '" + std::string(text) + "'");
}

}  // namespace fgb

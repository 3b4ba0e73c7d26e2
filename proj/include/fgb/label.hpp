#pragma once

#include <array>
#include <string_view>

namespace fgb {

/// Binary diagnosis label shared by the data, classifier and study modules.
/// AMD is the positive class everywhere it matters.
enum class Label { Amd = 0, NonAmd = 1 };

inline constexpr std::array<Label, 2> kLabels{Label::Amd, Label::NonAmd};

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view text);

constexpr int index_of(Label label) noexcept { return static_cast<int>(label); }
constexpr Label label_from_index(int i) noexcept { return i == 0 ? Label::Amd : Label::NonAmd; }

}  // namespace fgb

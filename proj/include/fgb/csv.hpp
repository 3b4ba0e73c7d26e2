#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fgb::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;

    /// Column position by name, or -1.
    int column(std::string_view name) const;
};

/// RFC 4180 subset: quoted fields, doubled quotes, CRLF tolerated on input.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Writes header + rows with LF endings.
void write(const std::filesystem::path& path, const Row& header, const std::vector<Row>& rows);

}  // namespace fgb::csv

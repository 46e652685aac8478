#pragma once

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF, header row.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace screenrep {

class CsvTable {
public:
    static CsvTable parse(std::string_view text, const std::string& source = "<csv>");
    static CsvTable read(const std::filesystem::path& path);

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws FormatError naming the file when the column is absent.
    std::size_t require_column(std::string_view name) const;

    /// 1-based line of a data row in the source, for error messages.
    std::size_t line_of(std::size_t row) const { return lines_[row]; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

}  // namespace screenrep

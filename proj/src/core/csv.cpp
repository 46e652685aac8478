#include "screenrep/csv.hpp"

#include "screenrep/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace screenrep {

CsvTable CsvTable::parse(std::string_view text, const std::string& source) {
    CsvTable table;
    table.source_ = source;
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> record_lines;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t line = 1, record_line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            records.push_back(std::move(record));
            record_lines.push_back(record_line);
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            record_line = ++line;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw FormatError(source + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();

    if (records.empty()) throw InputError(source + ": empty CSV");
    table.header_ = std::move(records.front());
    for (std::string& h : table.header_) {
        while (!h.empty() && h.back() == ' ') h.pop_back();
        h.erase(0, std::min(h.find_first_not_of(' '), h.size()));
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header_.size()) {
            throw FormatError(source + ":" + std::to_string(record_lines[r]) + ": expected " +
                              std::to_string(table.header_.size()) + " fields, found " +
                              std::to_string(records[r].size()));
        }
        table.rows_.push_back(std::move(records[r]));
        table.lines_.push_back(record_lines[r]);
    }
    return table;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse(text, path.string());
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header_.begin());
}

std::size_t CsvTable::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw FormatError(source_ + ": missing column '" + std::string(name) + "'");
}

}  // namespace screenrep

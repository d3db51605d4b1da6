#ifndef FAIRTRIAGE_CSV_HPP
#define FAIRTRIAGE_CSV_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace fairtriage::csv {

using Row = std::vector<std::string>;

inline std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string join(const Row& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) line += ',';
        line += quote(row[i]);
    }
    return line;
}

// RFC 4180 subset: quoted fields, doubled quotes, LF or CRLF line ends.
inline std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty())
                throw ParseError("csv line " + std::to_string(line) + ": quote inside unquoted field");
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (field_started || !field.empty() || !row.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            field_started = false;
            ++line;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<Row> read(const std::filesystem::path& path) {
    try {
        return parse(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Buffers a whole table, written once with LF line ends.
class Table {
public:
    explicit Table(Row header) : width_(header.size()) { text_ = join(header) + '\n'; }

    void add(const Row& row) {
        if (row.size() != width_) throw Error("csv row width mismatch");
        text_ += join(row);
        text_ += '\n';
    }

    const std::string& text() const noexcept { return text_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << text_;
    }

private:
    std::size_t width_;
    std::string text_;
};

// column lookup by header name
inline std::size_t column(const Row& header, std::string_view name, std::string_view file) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError(std::string(file) + ": missing column '" + std::string(name) + "'");
}

}  // namespace fairtriage::csv

#endif

#include "enrollrec/csv.hpp"

#include "enrollrec/error.hpp"

namespace enrollrec::csv {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

std::optional<std::vector<std::string>> Reader::next_row() {
    std::string line;
    // Skip blank lines between records.
    do {
        if (!std::getline(in_, line)) return std::nullopt;
        ++physical_line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    } while (line.empty());
    row_line_ = physical_line_;

    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == line.size()) {
            if (!quoted) break;
            // Embedded newline inside quotes.
            std::string more;
            if (!std::getline(in_, more)) throw ParseError(row_line_, "unterminated quoted field");
            ++physical_line_;
            if (!more.empty() && more.back() == '\r') more.pop_back();
            field.push_back('\n');
            line = std::move(more);
            i = 0;
            continue;
        }
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
        ++i;
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

void expect_header(Reader& reader, const std::vector<std::string>& expected) {
    auto header = reader.next_row();
    if (!header) throw ParseError(1, "missing header row");
    bool ok = header->size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        std::string got = trim((*header)[i]);
        // Tolerate a UTF-8 byte order mark on the first column.
        if (i == 0 && got.rfind("\xEF\xBB\xBF", 0) == 0) got.erase(0, 3);
        ok = got == expected[i];
    }
    if (!ok) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        throw ParseError(reader.line(), "header does not match '" + want + "'");
    }
}

}  // namespace enrollrec::csv

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace enrollrec::csv {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
// Quoted fields may span lines; line() reports the line the row started on.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::optional<std::vector<std::string>> next_row();
    std::size_t line() const { return row_line_; }

private:
    std::istream& in_;
    std::size_t physical_line_ = 0;
    std::size_t row_line_ = 0;
};

// Quotes the field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Reads a header row and checks it equals `expected` (surrounding spaces ignored).
void expect_header(Reader& reader, const std::vector<std::string>& expected);

}  // namespace enrollrec::csv

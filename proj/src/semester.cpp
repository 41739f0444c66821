#include "enrollrec/semester.hpp"

#include <charconv>

#include "enrollrec/error.hpp"

namespace enrollrec {

std::string_view term_name(Term term) {
    switch (term) {
        case Term::Spring: return "Spring";
        case Term::Summer: return "Summer";
        case Term::Fall: return "Fall";
    }
    return "?";
}

Semester Semester::from_ordinal(int ordinal) {
    int year = ordinal >= 0 ? ordinal / 3 : -((-ordinal + 2) / 3);
    return Semester{year, static_cast<Term>(ordinal - year * 3)};
}

std::string Semester::to_string() const {
    return std::string(term_name(term)) + " " + std::to_string(year);
}

Semester Semester::parse(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    auto space = text.find(' ');
    if (space == std::string_view::npos) {
        throw Error("malformed semester '" + std::string(text) + "'");
    }
    std::string_view term_token = text.substr(0, space);
    std::string_view year_token = text.substr(space + 1);
    while (!year_token.empty() && year_token.front() == ' ') year_token.remove_prefix(1);

    Semester semester;
    if (term_token == "Spring") {
        semester.term = Term::Spring;
    } else if (term_token == "Summer") {
        semester.term = Term::Summer;
    } else if (term_token == "Fall") {
        semester.term = Term::Fall;
    } else {
        throw Error("unknown term '" + std::string(term_token) + "'");
    }
    auto [ptr, ec] = std::from_chars(year_token.data(), year_token.data() + year_token.size(),
                                     semester.year);
    if (ec != std::errc() || ptr != year_token.data() + year_token.size() || year_token.empty()) {
        throw Error("malformed year in semester '" + std::string(text) + "'");
    }
    return semester;
}

}  // namespace enrollrec

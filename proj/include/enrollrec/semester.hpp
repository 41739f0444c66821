#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace enrollrec {

// Academic calendar order within a year.
enum class Term { Spring = 0, Summer = 1, Fall = 2 };

struct Semester {
    int year = 0;
    Term term = Term::Spring;

    auto operator<=>(const Semester&) const = default;

    // Dense integer position, consecutive terms differ by 1.
    int ordinal() const { return year * 3 + static_cast<int>(term); }
    static Semester from_ordinal(int ordinal);

    Semester next() const { return from_ordinal(ordinal() + 1); }

    // "Fall 2014"
    std::string to_string() const;

    // Parses "<Term> <year>"; throws enrollrec::Error on anything else.
    static Semester parse(std::string_view text);
};

std::string_view term_name(Term term);

}  // namespace enrollrec

#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "enrollrec/enrollment.hpp"

namespace enrollrec {

struct CatalogEntry {
    CourseKey course;
    std::string title;
    std::string description;
    std::string department;
    std::string division;
    std::string college;
    long capacity = 0;

    bool operator==(const CatalogEntry&) const = default;
};

class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<CatalogEntry> entries);

    const std::vector<CatalogEntry>& entries() const { return entries_; }
    const CatalogEntry* find(const CourseKey& key) const;
    bool empty() const { return entries_.empty(); }

private:
    std::vector<CatalogEntry> entries_;
    std::map<CourseKey, std::size_t> index_;
};

// subject,course_number,title,description,department,division,college,capacity
Catalog parse_catalog(std::istream& in);
void write_catalog(std::ostream& out, const Catalog& catalog);

using EquivalencyPair = std::pair<CourseKey, CourseKey>;

// subject_a,number_a,subject_b,number_b  (unordered pairs)
std::vector<EquivalencyPair> parse_equivalencies(std::istream& in);
void write_equivalencies(std::ostream& out, const std::vector<EquivalencyPair>& pairs);

// Pairs whose two catalog descriptions are identical are cross-listings, not
// equivalencies, and are removed before validation.
std::vector<EquivalencyPair> drop_cross_listed(const std::vector<EquivalencyPair>& pairs,
                                               const Catalog& catalog);

// subject,course_number  (requirement lists, registrar lists, schedules)
std::vector<CourseKey> parse_course_list(std::istream& in);
void write_course_list(std::ostream& out, const std::vector<CourseKey>& courses);

// major,college
std::map<std::string, std::string> parse_major_colleges(std::istream& in);
void write_major_colleges(std::ostream& out, const std::map<std::string, std::string>& colleges);

}  // namespace enrollrec

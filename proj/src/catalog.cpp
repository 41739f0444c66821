#include "enrollrec/catalog.hpp"

#include <charconv>

#include "enrollrec/csv.hpp"
#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

const std::vector<std::string> kCatalogHeader = {"subject",    "course_number", "title",
                                                 "description", "department",  "division",
                                                 "college",     "capacity"};
const std::vector<std::string> kEquivalencyHeader = {"subject_a", "number_a", "subject_b",
                                                     "number_b"};
const std::vector<std::string> kCourseListHeader = {"subject", "course_number"};
const std::vector<std::string> kMajorHeader = {"major", "college"};

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
}

void require_width(const csv::Reader& reader, const std::vector<std::string>& row,
                   std::size_t width) {
    if (row.size() != width) {
        throw ParseError(reader.line(), "expected " + std::to_string(width) + " fields, got " +
                                            std::to_string(row.size()));
    }
}

}  // namespace

Catalog::Catalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].course, i);
}

const CatalogEntry* Catalog::find(const CourseKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

Catalog parse_catalog(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, kCatalogHeader);
    std::vector<CatalogEntry> entries;
    while (auto row = reader.next_row()) {
        require_width(reader, *row, kCatalogHeader.size());
        CatalogEntry e;
        e.course = CourseKey{trim((*row)[0]), trim((*row)[1])};
        e.title = (*row)[2];
        e.description = (*row)[3];
        e.department = trim((*row)[4]);
        e.division = trim((*row)[5]);
        e.college = trim((*row)[6]);
        std::string cap = trim((*row)[7]);
        if (!cap.empty()) {
            auto [ptr, ec] = std::from_chars(cap.data(), cap.data() + cap.size(), e.capacity);
            if (ec != std::errc() || ptr != cap.data() + cap.size()) {
                throw ParseError(reader.line(), "bad capacity '" + cap + "'");
            }
        }
        entries.push_back(std::move(e));
    }
    return Catalog(std::move(entries));
}

void write_catalog(std::ostream& out, const Catalog& catalog) {
    csv::write_row(out, kCatalogHeader);
    for (const auto& e : catalog.entries()) {
        csv::write_row(out, {e.course.subject, e.course.number, e.title, e.description,
                             e.department, e.division, e.college, std::to_string(e.capacity)});
    }
}

std::vector<EquivalencyPair> parse_equivalencies(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, kEquivalencyHeader);
    std::vector<EquivalencyPair> pairs;
    while (auto row = reader.next_row()) {
        require_width(reader, *row, kEquivalencyHeader.size());
        pairs.emplace_back(CourseKey{trim((*row)[0]), trim((*row)[1])},
                           CourseKey{trim((*row)[2]), trim((*row)[3])});
    }
    return pairs;
}

void write_equivalencies(std::ostream& out, const std::vector<EquivalencyPair>& pairs) {
    csv::write_row(out, kEquivalencyHeader);
    for (const auto& [a, b] : pairs) csv::write_row(out, {a.subject, a.number, b.subject, b.number});
}

std::vector<EquivalencyPair> drop_cross_listed(const std::vector<EquivalencyPair>& pairs,
                                               const Catalog& catalog) {
    std::vector<EquivalencyPair> out;
    for (const auto& p : pairs) {
        const auto* a = catalog.find(p.first);
        const auto* b = catalog.find(p.second);
        if (a && b && !a->description.empty() && a->description == b->description) continue;
        out.push_back(p);
    }
    return out;
}

std::vector<CourseKey> parse_course_list(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, kCourseListHeader);
    std::vector<CourseKey> courses;
    while (auto row = reader.next_row()) {
        require_width(reader, *row, kCourseListHeader.size());
        courses.push_back(CourseKey{trim((*row)[0]), trim((*row)[1])});
    }
    return courses;
}

void write_course_list(std::ostream& out, const std::vector<CourseKey>& courses) {
    csv::write_row(out, kCourseListHeader);
    for (const auto& c : courses) csv::write_row(out, {c.subject, c.number});
}

std::map<std::string, std::string> parse_major_colleges(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, kMajorHeader);
    std::map<std::string, std::string> out;
    while (auto row = reader.next_row()) {
        require_width(reader, *row, kMajorHeader.size());
        out[trim((*row)[0])] = trim((*row)[1]);
    }
    return out;
}

void write_major_colleges(std::ostream& out, const std::map<std::string, std::string>& colleges) {
    csv::write_row(out, kMajorHeader);
    for (const auto& [major, college] : colleges) csv::write_row(out, {major, college});
}

}  // namespace enrollrec

#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enrollrec/semester.hpp"

namespace enrollrec {

enum class EntryType { NewFreshman = 0, Transfer = 1 };

std::string_view entry_type_name(EntryType type);
EntryType parse_entry_type(std::string_view text);

// Course identity is the (subject, number) pair; the same pair offered in
// different semesters is one token.
struct CourseKey {
    std::string subject;
    std::string number;

    auto operator<=>(const CourseKey&) const = default;

    std::string to_string() const { return subject + " " + number; }
    // Splits at the last space: "Public Policy C103" -> {"Public Policy", "C103"}.
    static CourseKey parse(std::string_view text);
};

struct EnrollmentRecord {
    Semester semester;
    std::string student;
    std::string major;
    EntryType entry_type = EntryType::NewFreshman;
    CourseKey course;
    std::optional<std::string> grade;

    bool operator==(const EnrollmentRecord&) const = default;
};

struct EnrollmentTable {
    std::vector<EnrollmentRecord> records;
    // Rows dropped at parse time as exact (student, semester, course) repeats.
    std::size_t duplicates_dropped = 0;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

// Header: semester,student_id,major,entry_type,subject,course_number,grade
EnrollmentTable parse_enrollments(std::istream& in);
void write_enrollments(std::ostream& out, const EnrollmentTable& table);

// Letter grade -> grade points. Marks outside the map (P, NP, W, ...) are
// treated as missing grades.
using GradePoints = std::map<std::string, double, std::less<>>;
const GradePoints& default_grade_points();
std::optional<std::string> normalize_grade(std::string_view raw);

// Keeps courses with at least `min_enrollments` records across the table.
EnrollmentTable filter_courses(const EnrollmentTable& table, std::size_t min_enrollments = 10);
// Keeps students whose distinct-semester count lies in [min, max].
EnrollmentTable filter_students(const EnrollmentTable& table, std::size_t min_semesters = 2,
                                std::size_t max_semesters = 12);

// Bijective (subject, number) <-> dense index map, indices assigned in key order.
class CourseVocabulary {
public:
    CourseVocabulary() = default;
    explicit CourseVocabulary(std::vector<CourseKey> keys);
    static CourseVocabulary from_table(const EnrollmentTable& table);

    std::size_t size() const { return keys_.size(); }
    const CourseKey& key(std::size_t index) const { return keys_.at(index); }
    const std::vector<CourseKey>& keys() const { return keys_; }
    std::optional<std::size_t> find(const CourseKey& key) const;
    // Throws NotFoundError.
    std::size_t index(const CourseKey& key) const;

private:
    std::vector<CourseKey> keys_;
    std::map<CourseKey, std::size_t> index_;
};

struct StudentSemester {
    Semester semester;
    std::vector<std::size_t> courses;  // sorted, unique vocabulary indices
    std::string major;
    std::vector<std::string> grades;   // letter grades recorded that semester
    std::optional<double> gpa;
};

struct StudentHistory {
    std::string student;
    EntryType entry_type = EntryType::NewFreshman;
    std::vector<StudentSemester> semesters;  // strictly increasing

    std::size_t enrollment_count() const;
};

// Groups records by student (sorted by id). Courses outside `vocab` are dropped,
// and semesters left with no courses are omitted.
std::vector<StudentHistory> build_histories(const EnrollmentTable& table,
                                            const CourseVocabulary& vocab,
                                            const GradePoints& points = default_grade_points());

// Unweighted mean of mapped letter grades; nullopt when no letter grade exists.
std::optional<double> compute_gpa(const StudentHistory& history, Semester semester,
                                  const GradePoints& points = default_grade_points());
std::optional<double> mean_grade_points(const std::vector<std::string>& grades,
                                        const GradePoints& points = default_grade_points());

struct SerializedSequence {
    std::string student;
    std::vector<std::size_t> tokens;
    std::vector<std::size_t> semester_index;  // position -> index into the history's semesters
};

// Semester order is kept; courses within a semester are shuffled with an RNG
// derived from (seed, student id), so a single history serializes the same way
// alone or inside a corpus.
SerializedSequence serialize_history(const StudentHistory& history, std::uint64_t seed);
std::vector<SerializedSequence> serialize_sequences(const std::vector<StudentHistory>& histories,
                                                    std::uint64_t seed);

// Records partitioned by semester relative to the validation and test targets.
struct DatasetSplit {
    Semester validation;
    Semester test;
    EnrollmentTable sub_training;  // semester < validation
    EnrollmentTable validation_semester;
    EnrollmentTable between;       // validation < semester < test
    EnrollmentTable test_semester;
    EnrollmentTable later;         // semester > test

    // Everything before the test semester (used for the refit phase).
    EnrollmentTable full_training() const;
};

DatasetSplit split_by_semester(const EnrollmentTable& table, Semester validation, Semester test);

// Records of a single semester.
EnrollmentTable records_in(const EnrollmentTable& table, Semester semester);
// Records strictly before `semester`.
EnrollmentTable records_before(const EnrollmentTable& table, Semester semester);

struct DatasetStats {
    std::size_t record_count = 0;
    std::size_t student_count = 0;
    std::size_t duplicates_dropped = 0;
    std::map<CourseKey, std::size_t> course_enrollments;
    // total enrollments -> number of courses with that total
    std::map<std::size_t, std::size_t> enrollment_histogram;
    std::map<Semester, std::size_t> active_students;
};

DatasetStats dataset_stats(const EnrollmentTable& table);

// Stable 64-bit FNV-1a, used to derive per-entity RNG streams.
std::uint64_t stable_hash(std::string_view text, std::uint64_t seed = 0);

}  // namespace enrollrec

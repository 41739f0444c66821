#include "enrollrec/enrollment.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "enrollrec/csv.hpp"
#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

const std::vector<std::string> kEnrollmentHeader = {
    "semester", "student_id", "major", "entry_type", "subject", "course_number", "grade"};

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return std::string(s);
}

}  // namespace

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string_view entry_type_name(EntryType type) {
    return type == EntryType::Transfer ? "Transfer Student" : "New Freshman";
}

EntryType parse_entry_type(std::string_view text) {
    std::string t = trim(text);
    if (t == "New Freshman" || t == "Freshman" || t == "NewFreshman") return EntryType::NewFreshman;
    if (t == "Transfer Student" || t == "Transfer") return EntryType::Transfer;
    throw Error("unknown entry type '" + t + "'");
}

CourseKey CourseKey::parse(std::string_view text) {
    std::string t = trim(text);
    auto space = t.find_last_of(' ');
    if (space == std::string::npos || space == 0 || space + 1 == t.size()) {
        throw Error("malformed course id '" + t + "', expected '<subject> <number>'");
    }
    return CourseKey{trim(std::string_view(t).substr(0, space)), t.substr(space + 1)};
}

const GradePoints& default_grade_points() {
    static const GradePoints points = {
        {"A+", 4.0}, {"A", 4.0},  {"A-", 3.7}, {"B+", 3.3}, {"B", 3.0},  {"B-", 2.7}, {"C+", 2.3},
        {"C", 2.0},  {"C-", 1.7}, {"D+", 1.3}, {"D", 1.0},  {"D-", 0.7}, {"F", 0.0},
    };
    return points;
}

std::optional<std::string> normalize_grade(std::string_view raw) {
    std::string g = trim(raw);
    if (default_grade_points().contains(g)) return g;
    return std::nullopt;
}

EnrollmentTable parse_enrollments(std::istream& in) {
    csv::Reader reader(in);
    csv::expect_header(reader, kEnrollmentHeader);

    EnrollmentTable table;
    std::set<std::tuple<std::string, int, CourseKey>> seen;
    while (auto row = reader.next_row()) {
        if (row->size() != kEnrollmentHeader.size()) {
            throw ParseError(reader.line(), "expected 7 fields, got " + std::to_string(row->size()));
        }
        EnrollmentRecord record;
        try {
            record.semester = Semester::parse((*row)[0]);
            record.entry_type = parse_entry_type((*row)[3]);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(reader.line(), e.what());
        }
        record.student = trim((*row)[1]);
        if (record.student.empty()) throw ParseError(reader.line(), "empty student id");
        record.major = trim((*row)[2]);
        record.course = CourseKey{trim((*row)[4]), trim((*row)[5])};
        if (record.course.subject.empty() || record.course.number.empty()) {
            throw ParseError(reader.line(), "empty subject or course number");
        }
        record.grade = normalize_grade((*row)[6]);

        auto key = std::make_tuple(record.student, record.semester.ordinal(), record.course);
        if (!seen.insert(std::move(key)).second) {
            ++table.duplicates_dropped;
            continue;
        }
        table.records.push_back(std::move(record));
    }
    return table;
}

void write_enrollments(std::ostream& out, const EnrollmentTable& table) {
    csv::write_row(out, kEnrollmentHeader);
    for (const auto& r : table.records) {
        csv::write_row(out, {r.semester.to_string(), r.student, r.major,
                             std::string(entry_type_name(r.entry_type)), r.course.subject,
                             r.course.number, r.grade.value_or("")});
    }
}

EnrollmentTable filter_courses(const EnrollmentTable& table, std::size_t min_enrollments) {
    if (min_enrollments < 1) throw Error("min_enrollments must be >= 1");
    std::map<CourseKey, std::size_t> counts;
    for (const auto& r : table.records) ++counts[r.course];
    EnrollmentTable out;
    out.duplicates_dropped = table.duplicates_dropped;
    for (const auto& r : table.records) {
        if (counts[r.course] >= min_enrollments) out.records.push_back(r);
    }
    return out;
}

EnrollmentTable filter_students(const EnrollmentTable& table, std::size_t min_semesters,
                                std::size_t max_semesters) {
    if (min_semesters < 1 || min_semesters > max_semesters) {
        throw Error("require 1 <= min_semesters <= max_semesters");
    }
    std::map<std::string, std::set<int>> semesters;
    for (const auto& r : table.records) semesters[r.student].insert(r.semester.ordinal());
    EnrollmentTable out;
    out.duplicates_dropped = table.duplicates_dropped;
    for (const auto& r : table.records) {
        std::size_t n = semesters[r.student].size();
        if (n >= min_semesters && n <= max_semesters) out.records.push_back(r);
    }
    return out;
}

CourseVocabulary::CourseVocabulary(std::vector<CourseKey> keys) : keys_(std::move(keys)) {
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
}

CourseVocabulary CourseVocabulary::from_table(const EnrollmentTable& table) {
    std::vector<CourseKey> keys;
    keys.reserve(table.records.size());
    for (const auto& r : table.records) keys.push_back(r.course);
    return CourseVocabulary(std::move(keys));
}

std::optional<std::size_t> CourseVocabulary::find(const CourseKey& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t CourseVocabulary::index(const CourseKey& key) const {
    auto found = find(key);
    if (!found) throw NotFoundError("unknown course '" + key.to_string() + "'");
    return *found;
}

std::size_t StudentHistory::enrollment_count() const {
    std::size_t n = 0;
    for (const auto& s : semesters) n += s.courses.size();
    return n;
}

std::optional<double> mean_grade_points(const std::vector<std::string>& grades,
                                        const GradePoints& points) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : grades) {
        auto it = points.find(g);
        if (it == points.end()) continue;
        sum += it->second;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::vector<StudentHistory> build_histories(const EnrollmentTable& table,
                                            const CourseVocabulary& vocab,
                                            const GradePoints& points) {
    struct Acc {
        EntryType entry = EntryType::NewFreshman;
        std::map<int, StudentSemester> semesters;
        std::map<int, std::set<std::string>> majors;
    };
    std::map<std::string, Acc> by_student;
    for (const auto& r : table.records) {
        auto& acc = by_student[r.student];
        acc.entry = r.entry_type;
        auto& sem = acc.semesters[r.semester.ordinal()];
        sem.semester = r.semester;
        if (!r.major.empty()) acc.majors[r.semester.ordinal()].insert(r.major);
        if (r.grade) sem.grades.push_back(*r.grade);
        if (auto idx = vocab.find(r.course)) sem.courses.push_back(*idx);
    }

    std::vector<StudentHistory> out;
    out.reserve(by_student.size());
    for (auto& [student, acc] : by_student) {
        StudentHistory h;
        h.student = student;
        h.entry_type = acc.entry;
        for (auto& [ord, sem] : acc.semesters) {
            if (sem.courses.empty()) continue;
            std::sort(sem.courses.begin(), sem.courses.end());
            sem.courses.erase(std::unique(sem.courses.begin(), sem.courses.end()), sem.courses.end());
            // Multiple declared majors: the lexicographically first is the feature value.
            auto m = acc.majors.find(ord);
            if (m != acc.majors.end() && !m->second.empty()) sem.major = *m->second.begin();
            sem.gpa = mean_grade_points(sem.grades, points);
            h.semesters.push_back(std::move(sem));
        }
        if (!h.semesters.empty()) out.push_back(std::move(h));
    }
    return out;
}

std::optional<double> compute_gpa(const StudentHistory& history, Semester semester,
                                  const GradePoints& points) {
    for (const auto& s : history.semesters) {
        if (s.semester == semester) return mean_grade_points(s.grades, points);
    }
    return std::nullopt;
}

SerializedSequence serialize_history(const StudentHistory& history, std::uint64_t seed) {
    SerializedSequence seq;
    seq.student = history.student;
    std::mt19937_64 rng(stable_hash(history.student, seed));
    for (std::size_t s = 0; s < history.semesters.size(); ++s) {
        std::vector<std::size_t> courses = history.semesters[s].courses;
        std::shuffle(courses.begin(), courses.end(), rng);
        for (auto c : courses) {
            seq.tokens.push_back(c);
            seq.semester_index.push_back(s);
        }
    }
    return seq;
}

std::vector<SerializedSequence> serialize_sequences(const std::vector<StudentHistory>& histories,
                                                    std::uint64_t seed) {
    std::vector<SerializedSequence> out;
    out.reserve(histories.size());
    for (const auto& h : histories) out.push_back(serialize_history(h, seed));
    return out;
}

EnrollmentTable DatasetSplit::full_training() const {
    EnrollmentTable out;
    out.records = sub_training.records;
    out.records.insert(out.records.end(), validation_semester.records.begin(),
                       validation_semester.records.end());
    out.records.insert(out.records.end(), between.records.begin(), between.records.end());
    return out;
}

DatasetSplit split_by_semester(const EnrollmentTable& table, Semester validation, Semester test) {
    if (!(validation < test)) {
        throw Error("validation semester " + validation.to_string() +
                    " must precede test semester " + test.to_string());
    }
    DatasetSplit split;
    split.validation = validation;
    split.test = test;
    for (const auto& r : table.records) {
        if (r.semester < validation) {
            split.sub_training.records.push_back(r);
        } else if (r.semester == validation) {
            split.validation_semester.records.push_back(r);
        } else if (r.semester < test) {
            split.between.records.push_back(r);
        } else if (r.semester == test) {
            split.test_semester.records.push_back(r);
        } else {
            split.later.records.push_back(r);
        }
    }
    if (split.sub_training.empty()) {
        throw Error("no training records before validation semester " + validation.to_string());
    }
    return split;
}

EnrollmentTable records_in(const EnrollmentTable& table, Semester semester) {
    EnrollmentTable out;
    for (const auto& r : table.records) {
        if (r.semester == semester) out.records.push_back(r);
    }
    return out;
}

EnrollmentTable records_before(const EnrollmentTable& table, Semester semester) {
    EnrollmentTable out;
    for (const auto& r : table.records) {
        if (r.semester < semester) out.records.push_back(r);
    }
    return out;
}

DatasetStats dataset_stats(const EnrollmentTable& table) {
    DatasetStats stats;
    stats.record_count = table.records.size();
    stats.duplicates_dropped = table.duplicates_dropped;
    std::set<std::string> students;
    std::map<Semester, std::set<std::string>> active;
    for (const auto& r : table.records) {
        ++stats.course_enrollments[r.course];
        students.insert(r.student);
        active[r.semester].insert(r.student);
    }
    stats.student_count = students.size();
    for (const auto& [course, n] : stats.course_enrollments) ++stats.enrollment_histogram[n];
    for (const auto& [semester, who] : active) stats.active_students[semester] = who.size();
    return stats;
}

}  // namespace enrollrec

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/baselines.hpp"
#include "enrollrec/enrollment.hpp"
#include "enrollrec/lstm.hpp"

namespace enrollrec {

// Uses the first k entries of `predicted`. Throws when `actual` is empty.
double recall_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> actual,
                   std::size_t k);
// 1 / rank of the first hit within the first k entries, 0 without a hit.
double mrr_at_k(std::span<const std::size_t> predicted, std::span<const std::size_t> actual,
                std::size_t k);

// One student to predict for the target semester.
struct EvalCase {
    StudentHistory history;             // in-vocabulary semesters before the target (may be empty)
    std::string major;                  // major in the target semester
    std::vector<std::size_t> actual;    // in-vocabulary target courses, sorted
};

struct EvalSet {
    Semester target;
    std::vector<EvalCase> cases;        // sorted by student id
    std::vector<std::size_t> offered;   // sorted
    std::vector<std::string> excluded;  // target students without in-vocabulary courses
};

// Cases for every student enrolled in `target`. The offered set is the courses
// with target-semester enrollments unless `schedule` is given. Throws when the
// target semester has no records.
EvalSet build_eval_set(const EnrollmentTable& table, const CourseVocabulary& vocab, Semester target,
                       const std::optional<std::vector<std::size_t>>& schedule = std::nullopt);

// Ranked top-k per case, in case order.
using BatchPredictor = std::function<std::vector<std::vector<std::size_t>>(
    const std::vector<EvalCase>&, std::span<const std::size_t> offered, std::size_t k)>;

BatchPredictor lstm_predictor(const LstmModel& model);
BatchPredictor popularity_predictor(const PopularityModel& model);
// Averages predictions over `shuffles` serializations with seeds seed, seed+1, ...
BatchPredictor ngram_predictor(const NgramTable& table, std::uint64_t seed, std::size_t shuffles = 5);

struct StudentEval {
    std::string student;
    double recall = 0.0;
    double rr = 0.0;
    std::size_t prior_semesters = 0;
    std::string major;
    std::string college;
};

struct EvalReport {
    std::size_t k = 10;
    std::vector<StudentEval> students;
    double mean_recall = 0.0;
    double mrr = 0.0;
    std::size_t excluded = 0;
};

// `colleges` maps major -> college; unmapped majors are grouped as "unknown".
EvalReport evaluate(const EvalSet& set, const BatchPredictor& predictor, std::size_t k = 10,
                    const std::map<std::string, std::string>& colleges = {});

enum class BreakdownDimension { PriorSemesters, College, Major };

struct BreakdownRow {
    std::string group;
    std::size_t count = 0;
    double mean_recall = 0.0;
    double mrr = 0.0;
};

// Groups sorted by key (numerically for prior semesters).
std::vector<BreakdownRow> breakdown(const EvalReport& report, BreakdownDimension dimension);

void write_report_csv(std::ostream& out, const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);

}  // namespace enrollrec

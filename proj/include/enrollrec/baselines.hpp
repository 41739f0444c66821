#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "enrollrec/enrollment.hpp"
#include "enrollrec/prediction.hpp"
#include "enrollrec/semester.hpp"

namespace enrollrec {

// Counts of the token following each context, for every order 1..n.
// orders[k] holds contexts of length k (orders[0] is the unigram table with the
// empty context).
struct NgramTable {
    using Context = std::vector<std::size_t>;
    using Counts = std::map<std::size_t, std::size_t>;

    std::size_t n = 2;
    std::size_t vocab_size = 0;
    std::vector<std::map<Context, Counts>> orders;
    std::vector<std::string> warnings;

    const Counts* find(const Context& context) const;
};

// Windows never cross student boundaries. Throws unless n is 2 or 3.
NgramTable train_ngram(const std::vector<SerializedSequence>& sequences, std::size_t n,
                       std::size_t vocab_size);

// Next-token distribution over the whole vocabulary from the last n-1 tokens,
// backing off to shorter contexts and finally the unigram counts. Not masked.
std::vector<double> ngram_distribution(const NgramTable& table, std::span<const std::size_t> history);

// Masked prediction averaged over several serializations of the student's history.
Prediction ngram_predict(const NgramTable& table,
                         const std::vector<std::vector<std::size_t>>& serialized_histories,
                         std::span<const std::size_t> offered, std::size_t k = 10);

// "<context tokens> -> <token>: <count>" lines, sorted by order then context.
std::string export_ngram(const NgramTable& table, const std::vector<std::string>& tokens);

struct PopularityModel {
    Term term = Term::Fall;
    std::vector<Semester> semesters;  // semesters counted
    bool by_major = false;
    std::vector<double> global;       // per course index
    std::map<std::string, std::vector<double>> per_major;
};

// Counts enrollments per course over the `lookback` most recent semesters of the
// target's term that precede `target`. Throws when none exist.
PopularityModel train_popularity(const EnrollmentTable& table, const CourseVocabulary& vocab,
                                 Semester target, std::size_t lookback = 4, bool by_major = false);

// Counts of the student's major (falling back to global counts when the major is
// unknown or has no enrollments), ranked within `offered`, ties by index.
Prediction popularity_predict(const PopularityModel& model, const std::string& major,
                              std::span<const std::size_t> offered, std::size_t k = 10);

}  // namespace enrollrec

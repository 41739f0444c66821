#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "enrollrec/enrollment.hpp"
#include "enrollrec/linalg.hpp"
#include "enrollrec/skipgram.hpp"

namespace enrollrec {

// dot / (|a| |b|); 0 when either norm is 0. Throws on dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

// Course vectors (one row per vocabulary index) with a subject tag per course.
class EmbeddingSpace {
public:
    EmbeddingSpace() = default;
    EmbeddingSpace(RowMatrix vectors, std::vector<std::string> subjects);
    // Input-matrix rows are the canonical course vectors.
    static EmbeddingSpace from_model(const SkipGramModel& model, const CourseVocabulary& vocab);

    std::size_t size() const { return static_cast<std::size_t>(vectors_.rows()); }
    std::size_t dimension() const { return static_cast<std::size_t>(vectors_.cols()); }
    std::span<const double> vector(std::size_t course) const;
    const std::string& subject(std::size_t course) const { return subjects_.at(course); }
    const RowMatrix& vectors() const { return vectors_; }

private:
    RowMatrix vectors_;
    std::vector<std::string> subjects_;
};

struct Neighbor {
    std::size_t course;
    double similarity;
};

// Top-k by cosine excluding the query; ties by index ascending.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, std::size_t course,
                                        std::size_t k);

// Element-wise mean of the subject's course vectors.
std::vector<double> subject_centroid(const EmbeddingSpace& space, std::string_view subject);

// Any course representation that can be compared pairwise (course2vec, BOW).
struct SimilaritySource {
    std::function<bool(std::size_t)> has_representation;
    std::function<double(std::size_t, std::size_t)> similarity;
};

SimilaritySource embedding_similarity(const EmbeddingSpace& space);

struct RankStatistics {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::vector<std::size_t> ranks;  // one per evaluated direction, in pair order
    std::vector<std::pair<std::size_t, std::size_t>> skipped;  // pairs lacking a representation
};

// For every pair (a, b), both directions a->b and b->a: the rank of the partner
// among all candidates other than the query, by descending similarity with ties
// broken by index. Rank 1 means the partner is the most similar candidate.
RankStatistics equivalency_rank_eval(const SimilaritySource& source,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const std::vector<std::size_t>& candidates);

// Summary statistics over an already computed rank list.
RankStatistics summarize_ranks(std::vector<std::size_t> ranks);

}  // namespace enrollrec

#include "enrollrec/embedding_space.hpp"

#include <algorithm>
#include <cmath>

#include "enrollrec/error.hpp"

namespace enrollrec {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingSpace::EmbeddingSpace(RowMatrix vectors, std::vector<std::string> subjects)
    : vectors_(std::move(vectors)), subjects_(std::move(subjects)) {
    if (subjects_.size() != size()) throw Error("one subject tag per course vector required");
    if (!vectors_.allFinite()) throw Error("embedding contains non-finite values");
}

EmbeddingSpace EmbeddingSpace::from_model(const SkipGramModel& model, const CourseVocabulary& vocab) {
    if (model.vocab_size() != vocab.size()) {
        throw Error("skip-gram vocabulary (" + std::to_string(model.vocab_size()) +
                    ") does not match course vocabulary (" + std::to_string(vocab.size()) + ")");
    }
    std::vector<std::string> subjects;
    subjects.reserve(vocab.size());
    for (const auto& key : vocab.keys()) subjects.push_back(key.subject);
    return EmbeddingSpace(model.input, std::move(subjects));
}

std::span<const double> EmbeddingSpace::vector(std::size_t course) const {
    if (course >= size()) throw NotFoundError("course index " + std::to_string(course) + " not in space");
    return row_span(vectors_, static_cast<Eigen::Index>(course));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, std::size_t course,
                                        std::size_t k) {
    if (k < 1) throw Error("k must be >= 1");
    auto query = space.vector(course);
    std::vector<Neighbor> all;
    all.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (i == course) continue;
        all.push_back({i, cosine(query, space.vector(i))});
    }
    auto by_similarity = [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.course < b.course;
    };
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_similarity);
    all.resize(k);
    return all;
}

std::vector<double> subject_centroid(const EmbeddingSpace& space, std::string_view subject) {
    std::vector<double> sum(space.dimension(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space.subject(i) != subject) continue;
        auto v = space.vector(i);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
        ++n;
    }
    if (n == 0) throw NotFoundError("no course carries subject '" + std::string(subject) + "'");
    for (auto& x : sum) x /= static_cast<double>(n);
    return sum;
}

SimilaritySource embedding_similarity(const EmbeddingSpace& space) {
    return SimilaritySource{
        [&space](std::size_t c) { return c < space.size(); },
        [&space](std::size_t a, std::size_t b) { return cosine(space.vector(a), space.vector(b)); }};
}

RankStatistics summarize_ranks(std::vector<std::size_t> ranks) {
    RankStatistics stats;
    stats.ranks = std::move(ranks);
    if (stats.ranks.empty()) return stats;
    std::vector<std::size_t> sorted = stats.ranks;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    stats.median = n % 2 ? static_cast<double>(sorted[n / 2])
                         : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    double sum = 0.0;
    for (auto r : sorted) sum += static_cast<double>(r);
    stats.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (auto r : sorted) ss += (static_cast<double>(r) - stats.mean) * (static_cast<double>(r) - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(n));
    return stats;
}

RankStatistics equivalency_rank_eval(const SimilaritySource& source,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                     const std::vector<std::size_t>& candidates) {
    std::vector<std::size_t> ranks;
    std::vector<std::pair<std::size_t, std::size_t>> skipped;
    auto in_candidates = [&](std::size_t c) {
        return std::find(candidates.begin(), candidates.end(), c) != candidates.end();
    };
    auto rank_of = [&](std::size_t query, std::size_t partner) {
        const double target = source.similarity(query, partner);
        std::size_t rank = 1;
        for (auto c : candidates) {
            if (c == query || c == partner) continue;
            const double s = source.similarity(query, c);
            if (s > target || (s == target && c < partner)) ++rank;
        }
        return rank;
    };
    for (const auto& [a, b] : pairs) {
        if (a == b || !source.has_representation(a) || !source.has_representation(b) ||
            !in_candidates(a) || !in_candidates(b)) {
            skipped.emplace_back(a, b);
            continue;
        }
        ranks.push_back(rank_of(a, b));
        ranks.push_back(rank_of(b, a));
    }
    auto stats = summarize_ranks(std::move(ranks));
    stats.skipped = std::move(skipped);
    return stats;
}

}  // namespace enrollrec

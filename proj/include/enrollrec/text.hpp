#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace enrollrec {

// Lowercases, deletes apostrophes and splits on anything that is not an ASCII
// letter. Digits and punctuation never appear in tokens.
std::vector<std::string> tokenize(std::string_view text);

// Shipped English stopword list (already apostrophe-free).
const std::vector<std::string>& default_stopwords();

using StopwordSet = std::set<std::string, std::less<>>;
StopwordSet make_stopword_set(const std::vector<std::string>& words);

// tokenize + stopword removal, before stemming.
std::vector<std::string> normalize_tokens(std::string_view text, const StopwordSet& stopwords);
// normalize_tokens + Porter stemming.
std::vector<std::string> stem_tokens(std::string_view text, const StopwordSet& stopwords);

// Multi-hot vector stored as its sorted set bits.
struct BowVector {
    std::size_t dimension = 0;
    std::vector<std::size_t> bits;  // sorted, unique

    bool operator==(const BowVector&) const = default;
    bool test(std::size_t i) const;
    std::size_t count() const { return bits.size(); }
    BowVector operator|(const BowVector& other) const;
};

class BowVocabulary {
public:
    std::size_t size() const { return stems_.size(); }
    const std::vector<std::string>& stems() const { return stems_; }
    const std::string& stem(std::size_t index) const { return stems_.at(index); }
    const std::vector<std::size_t>& doc_freq() const { return doc_freq_; }
    // Top-frequency stems excluded from the vocabulary, most frequent first.
    const std::vector<std::string>& removed() const { return removed_; }
    const std::vector<std::size_t>& removed_doc_freq() const { return removed_doc_freq_; }
    const StopwordSet& stopwords() const { return stopwords_; }
    int find(std::string_view stem) const;

    void write(std::ostream& out) const;
    static BowVocabulary read(std::istream& in, const std::vector<std::string>& stopwords);

private:
    friend BowVocabulary build_bow_vocabulary(const std::vector<std::string>&,
                                              const std::vector<std::string>&, std::size_t);
    void reindex();

    std::vector<std::string> stems_;
    std::vector<std::size_t> doc_freq_;
    std::vector<std::string> removed_;
    std::vector<std::size_t> removed_doc_freq_;
    std::map<std::string, std::size_t, std::less<>> index_;
    StopwordSet stopwords_;
};

// Document frequencies are counted on stems. The `top_k_removed` stems with the
// highest document frequency are dropped (ties broken lexicographically); the
// remaining stems are indexed in lexicographic order.
BowVocabulary build_bow_vocabulary(const std::vector<std::string>& descriptions,
                                   const std::vector<std::string>& stopwords = default_stopwords(),
                                   std::size_t top_k_removed = 15);

BowVector vectorize_description(std::string_view text, const BowVocabulary& vocab);

// Cosine of two multi-hot vectors; 0 when either is empty.
double bow_cosine(const BowVector& a, const BowVector& b);

struct RankedCandidate {
    std::size_t course;
    double similarity;
    std::size_t rank;  // 1-based
};

// Candidates sorted by descending cosine to the query, ties by index ascending.
std::vector<RankedCandidate> bow_cosine_rank(std::size_t query,
                                             const std::vector<std::size_t>& candidates,
                                             const std::vector<BowVector>& vectors);

}  // namespace enrollrec

#include "enrollrec/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "enrollrec/error.hpp"
#include "enrollrec/porter.hpp"

namespace enrollrec {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        auto c = static_cast<unsigned char>(raw);
        if (c == '\'') continue;
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
        if (c >= 'a' && c <= 'z') {
            current.push_back(static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

const std::vector<std::string>& default_stopwords() {
    // Common English function words.
    static const std::vector<std::string> words = {
        "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "youre", "youve",
        "youll", "youd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
        "she", "shes", "her", "hers", "herself", "it", "its", "itself", "they", "them", "their",
        "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "thatll", "these",
        "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
        "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
        "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
        "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
        "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then",
        "once", "here", "there", "when", "where", "why", "how", "all", "any", "both", "each",
        "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same",
        "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "dont", "should",
        "shouldve", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "arent", "couldn",
        "couldnt", "didn", "didnt", "doesn", "doesnt", "hadn", "hadnt", "hasn", "hasnt", "haven",
        "havent", "isn", "isnt", "ma", "mightn", "mightnt", "mustn", "mustnt", "needn", "neednt",
        "shan", "shant", "shouldn", "shouldnt", "wasn", "wasnt", "weren", "werent", "won", "wont",
        "wouldn", "wouldnt"};
    return words;
}

StopwordSet make_stopword_set(const std::vector<std::string>& words) {
    StopwordSet set;
    for (const auto& w : words) {
        for (auto& t : tokenize(w)) set.insert(std::move(t));
    }
    return set;
}

std::vector<std::string> normalize_tokens(std::string_view text, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) {
        if (!stopwords.contains(t)) out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::string> stem_tokens(std::string_view text, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    for (const auto& t : normalize_tokens(text, stopwords)) out.push_back(porter_stem(t));
    return out;
}

bool BowVector::test(std::size_t i) const {
    return std::binary_search(bits.begin(), bits.end(), i);
}

BowVector BowVector::operator|(const BowVector& other) const {
    if (dimension != other.dimension) throw Error("BOW dimension mismatch");
    BowVector out;
    out.dimension = dimension;
    std::set_union(bits.begin(), bits.end(), other.bits.begin(), other.bits.end(),
                   std::back_inserter(out.bits));
    return out;
}

int BowVocabulary::find(std::string_view stem) const {
    auto it = index_.find(stem);
    return it == index_.end() ? -1 : static_cast<int>(it->second);
}

void BowVocabulary::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < stems_.size(); ++i) index_.emplace(stems_[i], i);
}

void BowVocabulary::write(std::ostream& out) const {
    out << "# bow-vocabulary v1\n";
    for (std::size_t i = 0; i < stems_.size(); ++i) {
        out << stems_[i] << '\t' << i << '\t' << doc_freq_[i] << '\n';
    }
    out << "# removed\n";
    for (std::size_t i = 0; i < removed_.size(); ++i) {
        out << removed_[i] << '\t' << removed_doc_freq_[i] << '\n';
    }
}

BowVocabulary BowVocabulary::read(std::istream& in, const std::vector<std::string>& stopwords) {
    BowVocabulary vocab;
    vocab.stopwords_ = make_stopword_set(stopwords);
    std::string line;
    if (!std::getline(in, line) || line != "# bow-vocabulary v1") {
        throw Error("not a bow-vocabulary v1 file");
    }
    bool removed_section = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "# removed") {
            removed_section = true;
            continue;
        }
        std::istringstream fields(line);
        std::string stem;
        std::size_t a = 0, b = 0;
        if (!std::getline(fields, stem, '\t')) throw Error("bad vocabulary line: " + line);
        if (removed_section) {
            if (!(fields >> a)) throw Error("bad removed line: " + line);
            vocab.removed_.push_back(stem);
            vocab.removed_doc_freq_.push_back(a);
        } else {
            if (!(fields >> a >> b) || a != vocab.stems_.size()) {
                throw Error("bad vocabulary line: " + line);
            }
            vocab.stems_.push_back(stem);
            vocab.doc_freq_.push_back(b);
        }
    }
    vocab.reindex();
    return vocab;
}

BowVocabulary build_bow_vocabulary(const std::vector<std::string>& descriptions,
                                   const std::vector<std::string>& stopwords,
                                   std::size_t top_k_removed) {
    if (descriptions.empty()) throw Error("no descriptions to build a vocabulary from");
    BowVocabulary vocab;
    vocab.stopwords_ = make_stopword_set(stopwords);

    std::map<std::string, std::size_t> df;
    for (const auto& d : descriptions) {
        auto stems = stem_tokens(d, vocab.stopwords_);
        std::sort(stems.begin(), stems.end());
        stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
        for (auto& s : stems) ++df[s];
    }
    if (df.empty()) throw Error("all descriptions are empty after preprocessing");

    std::vector<std::pair<std::string, std::size_t>> by_freq(df.begin(), df.end());
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t removed = std::min(top_k_removed, by_freq.size());
    for (std::size_t i = 0; i < removed; ++i) {
        vocab.removed_.push_back(by_freq[i].first);
        vocab.removed_doc_freq_.push_back(by_freq[i].second);
        df.erase(by_freq[i].first);
    }
    for (const auto& [stem, n] : df) {
        vocab.stems_.push_back(stem);
        vocab.doc_freq_.push_back(n);
    }
    vocab.reindex();
    return vocab;
}

BowVector vectorize_description(std::string_view text, const BowVocabulary& vocab) {
    BowVector v;
    v.dimension = vocab.size();
    for (const auto& s : stem_tokens(text, vocab.stopwords())) {
        int idx = vocab.find(s);
        if (idx >= 0) v.bits.push_back(static_cast<std::size_t>(idx));
    }
    std::sort(v.bits.begin(), v.bits.end());
    v.bits.erase(std::unique(v.bits.begin(), v.bits.end()), v.bits.end());
    return v;
}

double bow_cosine(const BowVector& a, const BowVector& b) {
    if (a.bits.empty() || b.bits.empty()) return 0.0;
    std::size_t common = 0;
    auto i = a.bits.begin();
    auto j = b.bits.begin();
    while (i != a.bits.end() && j != b.bits.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(common) /
           std::sqrt(static_cast<double>(a.bits.size()) * static_cast<double>(b.bits.size()));
}

std::vector<RankedCandidate> bow_cosine_rank(std::size_t query,
                                             const std::vector<std::size_t>& candidates,
                                             const std::vector<BowVector>& vectors) {
    const auto& q = vectors.at(query);
    std::vector<RankedCandidate> ranked;
    ranked.reserve(candidates.size());
    for (auto c : candidates) ranked.push_back({c, bow_cosine(q, vectors.at(c)), 0});
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.course < b.course;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
    return ranked;
}

}  // namespace enrollrec

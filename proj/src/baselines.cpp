#include "enrollrec/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "enrollrec/error.hpp"

namespace enrollrec {

const NgramTable::Counts* NgramTable::find(const Context& context) const {
    if (context.size() >= orders.size()) return nullptr;
    const auto& table = orders[context.size()];
    auto it = table.find(context);
    return it == table.end() ? nullptr : &it->second;
}

NgramTable train_ngram(const std::vector<SerializedSequence>& sequences, std::size_t n,
                       std::size_t vocab_size) {
    if (n != 2 && n != 3) throw Error("n-gram order must be 2 or 3, got " + std::to_string(n));
    NgramTable table;
    table.n = n;
    table.vocab_size = vocab_size;
    table.orders.resize(n);
    bool any_full_window = false;
    for (const auto& s : sequences) {
        const auto& tok = s.tokens;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] >= vocab_size) throw Error("token " + std::to_string(tok[i]) + " outside vocabulary");
            for (std::size_t k = 0; k < n && k <= i; ++k) {
                NgramTable::Context ctx(tok.begin() + static_cast<std::ptrdiff_t>(i - k),
                                        tok.begin() + static_cast<std::ptrdiff_t>(i));
                ++table.orders[k][ctx][tok[i]];
            }
            if (i + 1 >= n) any_full_window = true;
        }
    }
    if (!any_full_window) {
        table.orders.assign(n, {});
        table.warnings.push_back("no sequence has " + std::to_string(n) + " tokens; n-gram table is empty");
    }
    return table;
}

std::vector<double> ngram_distribution(const NgramTable& table, std::span<const std::size_t> history) {
    std::vector<double> probs(table.vocab_size, 0.0);
    const std::size_t max_ctx = std::min(table.n - 1, history.size());
    for (std::size_t len = max_ctx + 1; len-- > 0;) {
        NgramTable::Context ctx(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
        const auto* counts = table.find(ctx);
        if (!counts || counts->empty()) continue;
        double total = 0.0;
        for (const auto& [tok, c] : *counts) total += static_cast<double>(c);
        for (const auto& [tok, c] : *counts) probs[tok] = static_cast<double>(c) / total;
        return probs;
    }
    return probs;  // empty table: all zero, masking makes it uniform
}

Prediction ngram_predict(const NgramTable& table,
                         const std::vector<std::vector<std::size_t>>& serialized_histories,
                         std::span<const std::size_t> offered, std::size_t k) {
    if (serialized_histories.empty()) throw Error("n-gram prediction needs at least one serialization");
    std::vector<double> avg(table.vocab_size, 0.0);
    for (const auto& h : serialized_histories) {
        auto p = ngram_distribution(table, h);
        auto masked = mask_and_renormalize(p, offered);
        for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += masked.probs[j];
    }
    for (auto& x : avg) x /= static_cast<double>(serialized_histories.size());
    return mask_prediction(avg, offered, k);
}

std::string export_ngram(const NgramTable& table, const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& order : table.orders) {
        for (const auto& [ctx, counts] : order) {
            std::string c;
            for (std::size_t i = 0; i < ctx.size(); ++i) c += (i ? " " : "") + tokens.at(ctx[i]);
            for (const auto& [tok, n] : counts) {
                out += c + " -> " + tokens.at(tok) + ": " + std::to_string(n) + "\n";
            }
        }
    }
    return out;
}

PopularityModel train_popularity(const EnrollmentTable& table, const CourseVocabulary& vocab,
                                 Semester target, std::size_t lookback, bool by_major) {
    if (lookback < 1) throw Error("popularity lookback must be >= 1");
    std::set<Semester> candidates;
    for (const auto& r : table.records) {
        if (r.semester.term == target.term && r.semester < target) candidates.insert(r.semester);
    }
    if (candidates.empty()) {
        throw Error("no " + std::string(term_name(target.term)) + " semesters before " + target.to_string());
    }
    PopularityModel model;
    model.term = target.term;
    model.by_major = by_major;
    for (auto it = candidates.rbegin(); it != candidates.rend() && model.semesters.size() < lookback; ++it) {
        model.semesters.push_back(*it);
    }
    std::sort(model.semesters.begin(), model.semesters.end());
    const std::set<Semester> chosen(model.semesters.begin(), model.semesters.end());
    model.global.assign(vocab.size(), 0.0);
    for (const auto& r : table.records) {
        if (!chosen.count(r.semester)) continue;
        auto idx = vocab.find(r.course);
        if (!idx) continue;
        model.global[*idx] += 1.0;
        if (by_major) {
            auto& bucket = model.per_major[r.major];
            if (bucket.empty()) bucket.assign(vocab.size(), 0.0);
            bucket[*idx] += 1.0;
        }
    }
    return model;
}

Prediction popularity_predict(const PopularityModel& model, const std::string& major,
                              std::span<const std::size_t> offered, std::size_t k) {
    const std::vector<double>* counts = &model.global;
    if (model.by_major) {
        auto it = model.per_major.find(major);
        if (it != model.per_major.end() &&
            std::accumulate(it->second.begin(), it->second.end(), 0.0) > 0.0) {
            counts = &it->second;
        }
    }
    return mask_prediction(*counts, offered, k);
}

}  // namespace enrollrec

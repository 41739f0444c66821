#include "enrollrec/prediction.hpp"

#include <algorithm>
#include <numeric>

#include "enrollrec/error.hpp"

namespace enrollrec {

MaskResult mask_and_renormalize(std::span<const double> probs, std::span<const std::size_t> offered) {
    if (offered.empty()) throw Error("offered course set is empty");
    std::vector<char> keep(probs.size(), 0);
    for (auto c : offered) {
        if (c >= probs.size()) throw Error("offered course " + std::to_string(c) + " outside vocabulary");
        keep[c] = 1;
    }
    double mass = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (keep[j]) mass += probs[j];
    }
    MaskResult out;
    out.probs.assign(probs.size(), 0.0);
    if (!(mass > 0.0)) {
        const double u = 1.0 / static_cast<double>(std::count(keep.begin(), keep.end(), 1));
        for (std::size_t j = 0; j < probs.size(); ++j) {
            if (keep[j]) out.probs[j] = u;
        }
        out.uniform_fallback = true;
        return out;
    }
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (keep[j]) out.probs[j] = probs[j] / mass;
    }
    return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k,
                                       std::span<const std::size_t> eligible) {
    std::vector<std::size_t> idx;
    if (eligible.empty()) {
        idx.resize(probs.size());
        std::iota(idx.begin(), idx.end(), 0);
    } else {
        idx.assign(eligible.begin(), eligible.end());
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    }
    auto better = [&](std::size_t a, std::size_t b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    };
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
    idx.resize(k);
    return idx;
}

Prediction mask_prediction(std::span<const double> probs, std::span<const std::size_t> offered,
                           std::size_t k) {
    Prediction p;
    auto masked = mask_and_renormalize(probs, offered);
    if (masked.uniform_fallback) {
        p.warnings.push_back("no predicted probability on offered courses; using a uniform distribution");
    }
    p.probs = std::move(masked.probs);
    p.top = top_k_indices(p.probs, k, offered);
    return p;
}

}  // namespace enrollrec

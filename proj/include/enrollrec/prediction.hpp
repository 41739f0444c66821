#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace enrollrec {

// Zero outside `offered`, renormalize. If the offered mass is zero the result is
// uniform over `offered` and `uniform_fallback` is set.
struct MaskResult {
    std::vector<double> probs;
    bool uniform_fallback = false;
};
MaskResult mask_and_renormalize(std::span<const double> probs, std::span<const std::size_t> offered);

// Indices of the k largest entries among `eligible` (all when empty); ties by index.
std::vector<std::size_t> top_k_indices(std::span<const double> probs, std::size_t k,
                                       std::span<const std::size_t> eligible = {});

struct Prediction {
    std::vector<double> probs;
    std::vector<std::size_t> top;
    std::vector<std::string> warnings;
};
Prediction mask_prediction(std::span<const double> probs, std::span<const std::size_t> offered,
                           std::size_t k);

}  // namespace enrollrec

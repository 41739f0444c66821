#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "enrollrec/linalg.hpp"

namespace enrollrec {

enum class ProjectionMethod { Pca, ExactTsne };

ProjectionMethod parse_projection_method(std::string_view name);

struct TsneConfig {
    double perplexity = 30.0;  // clamped to (n-1)/3
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iterations = 250;
    std::uint64_t seed = 1;
};

// Rows are points. Both throw for fewer than 3 points or non-finite input.
// PCA: projection on the top-2 covariance eigenvectors, each oriented so that
// its largest-magnitude component is positive.
RowMatrix pca_2d(const RowMatrix& points);
// Exact O(n^2) t-SNE.
RowMatrix tsne_2d(const RowMatrix& points, const TsneConfig& config = {});

RowMatrix project_2d(const RowMatrix& points, ProjectionMethod method, std::uint64_t seed = 1);

}  // namespace enrollrec

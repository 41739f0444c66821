#include "enrollrec/projection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "enrollrec/error.hpp"

namespace enrollrec {

namespace {

void check_points(const RowMatrix& points) {
    if (points.rows() < 3) {
        throw Error("projection needs at least 3 points, got " + std::to_string(points.rows()));
    }
    if (!points.allFinite()) throw Error("projection input contains non-finite values");
}

// Row i of the result: conditional probabilities p_{j|i} with entropy log(perplexity).
Matrix conditional_probabilities(const Matrix& sq_dist, double perplexity) {
    const Eigen::Index n = sq_dist.rows();
    const double target = std::log(perplexity);
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0, lo = -1.0, hi = -1.0;  // negative = unbounded
        Vector row(n);
        for (int it = 0; it < 200; ++it) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                row(j) = j == i ? 0.0 : std::exp(-sq_dist(i, j) * beta);
                sum += row(j);
            }
            if (sum <= 0.0) {
                // beta too large for every neighbor
                hi = beta;
                beta = lo < 0 ? beta / 2.0 : (beta + lo) / 2.0;
                continue;
            }
            double weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) weighted += sq_dist(i, j) * row(j);
            const double entropy = std::log(sum) + beta * weighted / sum;
            row /= sum;
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                lo = beta;
                beta = hi < 0 ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = lo < 0 ? beta / 2.0 : (beta + lo) / 2.0;
            }
        }
        p.row(i) = row.transpose();
    }
    return p;
}

}  // namespace

ProjectionMethod parse_projection_method(std::string_view name) {
    if (name == "pca") return ProjectionMethod::Pca;
    if (name == "tsne") return ProjectionMethod::ExactTsne;
    throw Error("unknown projection method '" + std::string(name) + "' (expected pca or tsne)");
}

RowMatrix pca_2d(const RowMatrix& points) {
    check_points(points);
    Matrix centered = points;
    const Eigen::RowVectorXd mean = centered.colwise().mean();
    centered.rowwise() -= mean;
    const Matrix cov = centered.transpose() * centered / static_cast<double>(points.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
    const Eigen::Index d = cov.rows();
    RowMatrix out = RowMatrix::Zero(points.rows(), 2);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, d); ++k) {
        // eigenvalues ascend
        Vector v = solver.eigenvectors().col(d - 1 - k);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        out.col(k) = centered * v;
    }
    return out;
}

RowMatrix tsne_2d(const RowMatrix& points, const TsneConfig& config) {
    check_points(points);
    const Eigen::Index n = points.rows();
    const double perplexity = std::min(config.perplexity, static_cast<double>(n - 1) / 3.0);
    if (!(perplexity > 0.0)) throw Error("t-SNE perplexity must be > 0");

    Matrix sq(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = (points.row(i) - points.row(j)).squaredNorm();
    }
    Matrix p = conditional_probabilities(sq, perplexity);
    p = (p + p.transpose()) / (2.0 * static_cast<double>(n));
    p = p.cwiseMax(1e-12);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> g(0.0, 1e-4);
    Matrix y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = g(rng);
        y(i, 1) = g(rng);
    }
    Matrix velocity = Matrix::Zero(n, 2);
    Matrix gains = Matrix::Ones(n, 2);
    Matrix num(n, n);
    Matrix grad(n, 2);

    for (std::size_t it = 0; it < config.iterations; ++it) {
        const double exaggeration = it < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
        const double momentum = it < config.exaggeration_iterations ? 0.5 : 0.8;
        double qsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
                num(i, j) = num(j, i) = v;
                qsum += 2.0 * v;
            }
        }
        grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double q = std::max(num(i, j) / qsum, 1e-12);
                const double mult = (exaggeration * p(i, j) - q) * num(i, j);
                grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < 2; ++k) {
                const bool same_sign = (grad(i, k) > 0) == (velocity(i, k) > 0);
                gains(i, k) = same_sign ? std::max(gains(i, k) * 0.8, 0.01) : gains(i, k) + 0.2;
                velocity(i, k) = momentum * velocity(i, k) - config.learning_rate * gains(i, k) * grad(i, k);
            }
        }
        y += velocity;
        const Eigen::RowVectorXd mean = y.colwise().mean();
        y.rowwise() -= mean;
    }
    if (!y.allFinite()) throw Error("t-SNE produced non-finite coordinates");
    return y;
}

RowMatrix project_2d(const RowMatrix& points, ProjectionMethod method, std::uint64_t seed) {
    if (method == ProjectionMethod::Pca) return pca_2d(points);
    TsneConfig config;
    config.seed = seed;
    return tsne_2d(points, config);
}

}  // namespace enrollrec

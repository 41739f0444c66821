#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "enrollrec/linalg.hpp"

namespace enrollrec {

// Versioned binary model container:
//   "ENRC" | u32 format version | u64 manifest length | manifest JSON | tensor data
// The manifest records kind, kind version, free-form metadata and, per tensor,
// its name, shape and byte offset. Tensor data are little-endian float32,
// row-major.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;
};

struct ContainerContents {
    std::string kind;
    int version = 0;
    nlohmann::json meta;
    std::map<std::string, Tensor> tensors;

    // Throws enrollrec::Error unless `name` exists with exactly this shape.
    const Tensor& require(const std::string& name, std::size_t rows, std::size_t cols) const;
};

class ContainerWriter {
public:
    ContainerWriter(std::string kind, int version, nlohmann::json meta)
        : kind_(std::move(kind)), version_(version), meta_(std::move(meta)) {}

    template <typename Derived>
    void add(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
        Tensor t;
        t.rows = static_cast<std::size_t>(m.rows());
        t.cols = static_cast<std::size_t>(m.cols());
        t.values.reserve(t.rows * t.cols);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
        }
        tensors_.emplace_back(name, std::move(t));
    }

    void write(std::ostream& out) const;

private:
    std::string kind_;
    int version_;
    nlohmann::json meta_;
    std::vector<std::pair<std::string, Tensor>> tensors_;
};

// Rejects bad magic, unknown format versions, a kind other than
// `expected_kind`, and manifests whose shapes or offsets disagree with the data.
ContainerContents read_container(std::istream& in, const std::string& expected_kind);

template <typename MatrixT>
MatrixT to_matrix(const Tensor& t) {
    MatrixT m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.values[r * t.cols + c];
        }
    }
    return m;
}

}  // namespace enrollrec

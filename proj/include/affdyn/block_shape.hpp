#ifndef AFFDYN_BLOCK_SHAPE_HPP
#define AFFDYN_BLOCK_SHAPE_HPP

// Block-diagonal shape with lower triangular, constant-diagonal blocks of
// sizes eta = (n_1, ..., n_r).

#include "affdyn/affine.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace affdyn {

using Partition = std::vector<int>;

inline Index partition_size(std::span<const int> eta) {
    return std::accumulate(eta.begin(), eta.end(), Index{0});
}

/// Start index of every block.
inline std::vector<Index> block_starts(std::span<const int> eta) {
    std::vector<Index> out;
    Index at = 0;
    for (int k : eta) {
        if (k <= 0)
            throw InputError("block sizes must be positive");
        out.push_back(at);
        at += k;
    }
    return out;
}

/// Block index of every coordinate.
inline std::vector<int> block_of_index(std::span<const int> eta) {
    std::vector<int> out;
    for (std::size_t b = 0; b < eta.size(); ++b)
        out.insert(out.end(), static_cast<std::size_t>(eta[b]), static_cast<int>(b));
    return out;
}

struct ShapeCheck {
    bool ok = false;
    double residual = 0.0; ///< largest violation (entry or diagonal spread)
};

/// Exact backend: ok iff there is no violation at all; residual is reported
/// in double precision. Float backend: ok iff residual <= tol.
template <class M>
ShapeCheck validate_block_shape(const M& m, std::span<const int> eta, double tol = 1e-9) {
    constexpr bool exact = std::is_same_v<M, ExactMatrix>;
    const Index n = partition_size(eta);
    if (m.rows() != n || m.cols() != n)
        throw InputError("validate_block_shape: matrix size does not match the partition");
    const auto block = block_of_index(eta);
    const auto starts = block_starts(eta);
    ShapeCheck out{true, 0.0};
    auto flag = [&](auto violation) {
        double mag = 0.0;
        if constexpr (exact) {
            if (violation.is_zero())
                return;
            mag = std::abs(violation.to_complex());
            out.ok = false;
        } else {
            mag = std::abs(violation);
        }
        out.residual = std::max(out.residual, mag);
    };
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const bool same = block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)];
            if (!same || j > i)
                flag(m(i, j));
            else if (i == j)
                flag(m(i, i) - m(starts[static_cast<std::size_t>(block[static_cast<std::size_t>(i)])],
                                 starts[static_cast<std::size_t>(block[static_cast<std::size_t>(i)])]));
        }
    if constexpr (!exact)
        out.ok = out.residual <= tol;
    return out;
}

/// Nearest matrix of the shape: forbidden entries zeroed, each block's
/// diagonal replaced by its mean.
inline CMatrix project_to_block_shape(const CMatrix& m, std::span<const int> eta) {
    const Index n = partition_size(eta);
    if (m.rows() != n || m.cols() != n)
        throw InputError("project_to_block_shape: matrix size does not match the partition");
    CMatrix out = CMatrix::Zero(n, n);
    const auto starts = block_starts(eta);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Index s = starts[b];
        const Index k = eta[b];
        const Complex mean = m.block(s, s, k, k).diagonal().mean();
        for (Index i = 0; i < k; ++i) {
            for (Index j = 0; j < i; ++j)
                out(s + i, s + j) = m(s + i, s + j);
            out(s + i, s + i) = mean;
        }
    }
    return out;
}

} // namespace affdyn

#endif // AFFDYN_BLOCK_SHAPE_HPP

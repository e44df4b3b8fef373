#pragma once

// Reference-channel selection for reference-assisted phase tracking.
//
// Reference phases theta^D = Q [theta^c, theta^r]^T with Q rows [1, d_i]. All
// channel phases are reconstructed as T Q^+ theta^D, so i.i.d. reference errors
// of variance s2 produce a total squared error s2 * ||T Q^+||_F^2. That norm is
// the selection criterion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eofc/error.hpp"
#include "eofc/model.hpp"

namespace eofc {

struct ReferenceSet {
    int channels = 0;                 ///< L
    std::vector<int> indices;         ///< sorted, distinct, within [-M, M]
    Eigen::Matrix<double, Eigen::Dynamic, 2> q;       ///< D x 2
    Eigen::Matrix<double, 2, Eigen::Dynamic> q_pinv;  ///< 2 x D
    Eigen::MatrixXd proj;             ///< L x D, T Q^+

    int size() const noexcept { return static_cast<int>(indices.size()); }

    /// Mirror image {-d : d in D}.
    std::vector<int> mirrored() const {
        std::vector<int> out;
        for (auto it = indices.rbegin(); it != indices.rend(); ++it) out.push_back(-*it);
        return out;
    }

    /// "{-3,3}" form used in tables and logs.
    std::string label() const {
        std::ostringstream os;
        os << '{';
        for (std::size_t i = 0; i < indices.size(); ++i) os << (i ? "," : "") << indices[i];
        os << '}';
        return os.str();
    }
};

inline ReferenceSet build_reference_set(int channels, std::vector<int> indices) {
    const MixingMatrix t = mixing_matrix(channels);
    const int half = (channels - 1) / 2;
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
        throw InvalidArgument("reference indices must be distinct");
    if (indices.size() < 2) throw InvalidArgument("at least two reference channels are needed (Q must have rank 2)");
    for (int d : indices)
        if (d < -half || d > half)
            throw InvalidArgument("reference index " + std::to_string(d) + " outside [-" + std::to_string(half) +
                                  ", " + std::to_string(half) + "]");

    ReferenceSet rs;
    rs.channels = channels;
    rs.indices = std::move(indices);
    const auto n = static_cast<Eigen::Index>(rs.indices.size());
    rs.q.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        rs.q(i, 0) = 1.0;
        rs.q(i, 1) = rs.indices[static_cast<std::size_t>(i)];
    }
    // Q has full column rank, so Q^+ = (Q^T Q)^{-1} Q^T with an explicit 2x2 inverse.
    const Eigen::Matrix2d gram = rs.q.transpose() * rs.q;
    rs.q_pinv = gram.inverse() * rs.q.transpose();
    rs.proj = t * rs.q_pinv;
    return rs;
}

/// ||T Q^+||_F^2.
inline double frobenius_criterion(const ReferenceSet& rs) { return rs.proj.squaredNorm(); }

namespace detail {

inline void check_subset_size(int channels, int count) {
    detail::require(channels >= 3 && channels % 2 == 1, "channel count L must be odd and >= 3");
    if (count < 2 || count > channels)
        throw InvalidArgument("reference count D must satisfy 2 <= D <= L (D = " + std::to_string(count) +
                              ", L = " + std::to_string(channels) + ")");
}

/// Visits every D-subset of {-M..M} in lexicographic order.
template <typename Visit>
void for_each_subset(int channels, int count, Visit&& visit) {
    const int half = (channels - 1) / 2;
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = -half + i;
    while (true) {
        visit(std::as_const(idx));
        int i = count - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == half - (count - 1 - i)) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < count; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

// Relative slack so that mirror subsets, whose criteria agree mathematically,
// are treated as ties and the lexicographic winner is kept.
constexpr double criterion_tie_tolerance = 1e-12;

}  // namespace detail

inline std::uint64_t subset_count(int channels, int count) {
    std::uint64_t c = 1;
    for (int i = 1; i <= count; ++i) c = c * static_cast<std::uint64_t>(channels - count + i) / static_cast<std::uint64_t>(i);
    return c;
}

/// All D-subsets with their criterion, in lexicographic subset order.
inline std::vector<std::pair<ReferenceSet, double>> enumerate_criteria(int channels, int count) {
    detail::check_subset_size(channels, count);
    std::vector<std::pair<ReferenceSet, double>> out;
    detail::for_each_subset(channels, count, [&](const std::vector<int>& idx) {
        auto rs = build_reference_set(channels, idx);
        const double c = frobenius_criterion(rs);
        out.emplace_back(std::move(rs), c);
    });
    return out;
}

inline std::pair<ReferenceSet, double> brute_force_optimal(int channels, int count) {
    detail::check_subset_size(channels, count);
    std::vector<int> best;
    double best_c = std::numeric_limits<double>::infinity();
    detail::for_each_subset(channels, count, [&](const std::vector<int>& idx) {
        const double c = frobenius_criterion(build_reference_set(channels, idx));
        if (best.empty() || c < best_c - detail::criterion_tie_tolerance * std::max(1.0, std::abs(best_c))) {
            best_c = c;
            best = idx;
        }
    });
    return {build_reference_set(channels, best), best_c};
}

/// The ceil(D/2) lowest indices together with the floor(D/2) highest ones.
inline ReferenceSet closed_form_optimal(int channels, int count) {
    detail::check_subset_size(channels, count);
    const int half = (channels - 1) / 2;
    const int low = (count + 1) / 2;
    const int high = count / 2;
    std::vector<int> idx;
    for (int i = 0; i < low; ++i) idx.push_back(-half + i);
    for (int i = high - 1; i >= 0; --i) idx.push_back(half - i);
    return build_reference_set(channels, std::move(idx));
}

/// max{2, ceil(alpha_p * L)}, capped at L.
inline int d_opt_heuristic(int channels, double pilot_rate) {
    detail::require(channels >= 3 && channels % 2 == 1, "channel count L must be odd and >= 3");
    detail::require(pilot_rate > 0.0 && pilot_rate <= 1.0, "pilot rate must lie in (0, 1]");
    const auto d = static_cast<int>(std::ceil(pilot_rate * channels - 1e-9));
    return std::clamp(d, 2, channels);
}

}  // namespace eofc

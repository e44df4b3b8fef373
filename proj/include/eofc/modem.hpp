#pragma once

// Gray-labelled square QAM: mapping, hard decisions, the exact AWGN bit error
// rate, SNR calibration and error bookkeeping.
//
// Symbol value s = (label_I << h) | label_Q with h = log2(sqrt(order)); each axis
// label is the binary-reflected Gray code of the level index. Points are scaled
// to unit average energy. "Canonical index" of a point is its symbol value.

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eofc/error.hpp"

namespace eofc {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

constexpr std::uint32_t gray_encode(std::uint32_t i) noexcept { return i ^ (i >> 1); }

constexpr std::uint32_t gray_decode(std::uint32_t g) noexcept {
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) g ^= g >> shift;
    return g;
}

inline double qfunc(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace detail

class Constellation {
public:
    /// Square QAM of the given order (4, 16, 64, 256, ...).
    static Constellation square_qam(int order) {
        const int bps = order > 1 ? std::countr_zero(static_cast<unsigned>(order)) : 0;
        if (order < 4 || !std::has_single_bit(static_cast<unsigned>(order)) || bps % 2 != 0)
            throw InvalidArgument("square QAM order must be an even power of two >= 4, got " +
                                  std::to_string(order));
        Constellation c;
        c.order_ = order;
        c.bits_per_symbol_ = bps;
        c.levels_ = 1 << (bps / 2);
        c.scale_ = std::sqrt(3.0 / (2.0 * (order - 1)));
        c.points_.resize(static_cast<std::size_t>(order));
        const int h = bps / 2;
        for (std::uint32_t s = 0; s < static_cast<std::uint32_t>(order); ++s) {
            const auto li = detail::gray_decode(s >> h);
            const auto lq = detail::gray_decode(s & ((1u << h) - 1));
            c.points_[s] = {c.level_amplitude(static_cast<int>(li)), c.level_amplitude(static_cast<int>(lq))};
        }
        return c;
    }

    int order() const noexcept { return order_; }
    int bits_per_symbol() const noexcept { return bits_per_symbol_; }
    /// Number of amplitude levels per axis, sqrt(order).
    int levels() const noexcept { return levels_; }
    /// Half the minimum distance.
    double scale() const noexcept { return scale_; }
    std::span<const std::complex<double>> points() const noexcept { return points_; }
    std::complex<double> point(std::uint32_t symbol) const { return points_.at(symbol); }
    /// Gray bit label of a point; equals its symbol value.
    std::uint32_t bit_label(std::uint32_t symbol) const noexcept { return symbol; }

    double level_amplitude(int level) const noexcept { return (2 * level - levels_ + 1) * scale_; }

    /// Maximum-energy point with the smallest canonical index; used as the pilot.
    std::uint32_t pilot_symbol() const noexcept {
        std::uint32_t best = 0;
        for (std::uint32_t s = 1; s < points_.size(); ++s)
            if (std::norm(points_[s]) > std::norm(points_[best])) best = s;
        return best;
    }

    /// Minimum-distance decision. Exact ties resolve to the smaller symbol value.
    std::uint32_t decide(std::complex<double> y) const noexcept {
        const int h = bits_per_symbol_ / 2;
        return (axis_label(y.real()) << h) | axis_label(y.imag());
    }

private:
    Constellation() = default;

    // Nearest level on one axis; distance terms are separable, so picking the
    // smallest label on each axis picks the smallest symbol among tied points.
    std::uint32_t axis_label(double x) const noexcept {
        const double u = (x / scale_ + levels_ - 1) / 2.0;
        int lo = static_cast<int>(std::floor(u));
        if (lo < 0) return detail::gray_encode(0);
        if (lo >= levels_ - 1) return detail::gray_encode(static_cast<std::uint32_t>(levels_ - 1));
        const int hi = lo + 1;
        const double dlo = std::abs(x - level_amplitude(lo));
        const double dhi = std::abs(x - level_amplitude(hi));
        const auto glo = detail::gray_encode(static_cast<std::uint32_t>(lo));
        const auto ghi = detail::gray_encode(static_cast<std::uint32_t>(hi));
        if (dlo < dhi) return glo;
        if (dhi < dlo) return ghi;
        return std::min(glo, ghi);
    }

    int order_ = 0;
    int bits_per_symbol_ = 0;
    int levels_ = 0;
    double scale_ = 0.0;
    std::vector<std::complex<double>> points_;
};

/// Bits are MSB-first within each symbol, one bit per byte (0 or 1).
inline std::vector<std::complex<double>> map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
    const auto b = static_cast<std::size_t>(c.bits_per_symbol());
    if (bits.size() % b != 0)
        throw InvalidArgument("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                              std::to_string(b));
    std::vector<std::complex<double>> out(bits.size() / b);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t s = 0;
        for (std::size_t j = 0; j < b; ++j) s = (s << 1) | (bits[i * b + j] & 1u);
        out[i] = c.point(s);
    }
    return out;
}

inline std::vector<std::uint8_t> demap_hard(std::span<const std::complex<double>> y, const Constellation& c) {
    const auto b = static_cast<std::size_t>(c.bits_per_symbol());
    std::vector<std::uint8_t> bits(y.size() * b);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto s = c.decide(y[i]);
        for (std::size_t j = 0; j < b; ++j) bits[i * b + j] = static_cast<std::uint8_t>((s >> (b - 1 - j)) & 1u);
    }
    return bits;
}

/// Exact AWGN bit error rate of Gray-labelled square QAM at Es/N0 = snr_db
/// (Es = 1, N0 = total complex noise variance). I and Q are independent PAMs,
/// so the rate is the per-axis PAM rate, summed over all transmit/decision
/// level pairs weighted by their Hamming distance.
inline double analytic_ber(const Constellation& c, double snr_db) {
    const double n0 = std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(n0 / 2.0);
    const int k = c.levels();
    const int h = c.bits_per_symbol() / 2;
    constexpr double inf = std::numeric_limits<double>::infinity();
    auto lower = [&](int j) { return j == 0 ? -inf : (2 * j - k) * c.scale(); };
    auto upper = [&](int j) { return j == k - 1 ? inf : (2 * j - k + 2) * c.scale(); };
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        const double a = c.level_amplitude(i);
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            const double lo = lower(j), hi = upper(j);
            double p;
            if (lo >= a)
                p = detail::qfunc((lo - a) / sigma) - (std::isinf(hi) ? 0.0 : detail::qfunc((hi - a) / sigma));
            else
                p = detail::qfunc((a - hi) / sigma) - (std::isinf(lo) ? 0.0 : detail::qfunc((a - lo) / sigma));
            const auto d = std::popcount(detail::gray_encode(static_cast<std::uint32_t>(i)) ^
                                         detail::gray_encode(static_cast<std::uint32_t>(j)));
            acc += p * d;
        }
    }
    return acc / (static_cast<double>(k) * h);
}

/// Es/N0 [dB] at which analytic_ber equals target_ber, by bisection to a
/// relative BER mismatch below 1e-6.
inline double calibrate_snr(double target_ber, const Constellation& c) {
    detail::require(target_ber > 0.0 && target_ber < 0.5, "target BER must lie in (0, 0.5)");
    double lo = -60.0, hi = 100.0;  // BER(lo) > target > BER(hi)
    if (!(analytic_ber(c, lo) > target_ber && analytic_ber(c, hi) < target_ber))
        throw Error("calibrate_snr: target BER not bracketed by [-60, 100] dB");
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double ber = analytic_ber(c, mid);
        if (std::abs(ber - target_ber) / target_ber < 1e-6) return mid;
        (ber > target_ber ? lo : hi) = mid;
    }
    throw Error("calibrate_snr: bisection did not converge");
}

struct BerReport {
    std::vector<std::uint64_t> bit_errors_per_channel;
    std::vector<std::uint64_t> bits_counted_per_channel;
    double ber_aggregate = 0.0;
    double mean_est_error = std::numeric_limits<double>::quiet_NaN();  ///< rad^2, when measured

    std::uint64_t total_errors() const {
        return std::accumulate(bit_errors_per_channel.begin(), bit_errors_per_channel.end(), std::uint64_t{0});
    }
    std::uint64_t total_bits() const {
        return std::accumulate(bits_counted_per_channel.begin(), bits_counted_per_channel.end(), std::uint64_t{0});
    }
    double channel_ber(std::size_t ch) const {
        const auto n = bits_counted_per_channel.at(ch);
        return n == 0 ? 0.0 : static_cast<double>(bit_errors_per_channel[ch]) / static_cast<double>(n);
    }

    bool operator==(const BerReport&) const = default;
};

namespace detail {

inline BerReport finish_report(BerReport r) {
    const auto bits = r.total_bits();
    r.ber_aggregate = bits == 0 ? 0.0 : static_cast<double>(r.total_errors()) / static_cast<double>(bits);
    return r;
}

}  // namespace detail

/// Counts bit errors where data_mask is true. Bits are laid out row by row
/// (channel-major, data_mask.rows() channels of data_mask.cols() symbols) with
/// tx_bits.size() / data_mask.size() bits per symbol.
inline BerReport count_errors(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> rx_bits,
                              const BoolGrid& data_mask) {
    if (tx_bits.size() != rx_bits.size())
        throw InvalidArgument("bit sequences differ in length (" + std::to_string(tx_bits.size()) + " vs " +
                              std::to_string(rx_bits.size()) + ")");
    const auto slots = static_cast<std::size_t>(data_mask.size());
    if (slots == 0 || tx_bits.size() % slots != 0)
        throw InvalidArgument("bit count does not match the mask size");
    const std::size_t bps = tx_bits.size() / slots;
    const auto rows = static_cast<std::size_t>(data_mask.rows());
    const auto cols = static_cast<std::size_t>(data_mask.cols());
    BerReport r;
    r.bit_errors_per_channel.assign(rows, 0);
    r.bits_counted_per_channel.assign(rows, 0);
    for (std::size_t ch = 0; ch < rows; ++ch)
        for (std::size_t k = 0; k < cols; ++k) {
            if (!data_mask(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(k))) continue;
            const std::size_t base = (ch * cols + k) * bps;
            for (std::size_t j = 0; j < bps; ++j)
                r.bit_errors_per_channel[ch] += (tx_bits[base + j] != rx_bits[base + j]);
            r.bits_counted_per_channel[ch] += bps;
        }
    return detail::finish_report(std::move(r));
}

/// Symbol-level variant of count_errors: bit errors are the Hamming distance
/// between the transmitted and decided labels.
inline BerReport count_symbol_errors(std::span<const std::uint32_t> tx_symbols,
                                     std::span<const std::uint32_t> rx_symbols, const BoolGrid& data_mask,
                                     int bits_per_symbol) {
    if (tx_symbols.size() != rx_symbols.size() || tx_symbols.size() != static_cast<std::size_t>(data_mask.size()))
        throw InvalidArgument("symbol sequences and mask differ in size");
    const auto rows = static_cast<std::size_t>(data_mask.rows());
    const auto cols = static_cast<std::size_t>(data_mask.cols());
    BerReport r;
    r.bit_errors_per_channel.assign(rows, 0);
    r.bits_counted_per_channel.assign(rows, 0);
    for (std::size_t ch = 0; ch < rows; ++ch)
        for (std::size_t k = 0; k < cols; ++k) {
            if (!data_mask(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(k))) continue;
            const std::size_t i = ch * cols + k;
            r.bit_errors_per_channel[ch] += static_cast<std::uint64_t>(std::popcount(tx_symbols[i] ^ rx_symbols[i]));
            r.bits_counted_per_channel[ch] += static_cast<std::uint64_t>(bits_per_symbol);
        }
    return detail::finish_report(std::move(r));
}

}  // namespace eofc

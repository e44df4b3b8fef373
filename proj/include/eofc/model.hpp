#pragma once

// Correlated phase-noise model of an electro-optic frequency comb.
//
// Channel m in {-M, ..., M} (L = 2M + 1 lines) sees the phase
//     theta_{m,k} = theta^c_k + m * theta^r_k
// where theta^c (CW laser) and theta^r (RF oscillator) are independent
// Gaussian random walks with per-symbol increment variance 2*pi*linewidth*Ts.
// Phases are kept unwrapped everywhere in this module.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eofc/error.hpp"
#include "eofc/random.hpp"

namespace eofc {

using cplx = std::complex<double>;

/// L x N complex sample grid; row r holds channel m = r - M.
using ChannelGrid = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// L x N real grid with the same row convention.
using RealGrid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// L x 2 mixing matrix, row (m + M) = [1, m].
using MixingMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Wrap an angle to [-pi, pi).
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w < 0.0) w += two_pi;
    return w - std::numbers::pi;
}

struct SystemParams {
    int channels = 11;              ///< L, odd and >= 3
    double delta_nu_c = 100e3;      ///< CW laser linewidth [Hz]
    double delta_nu_r = 100.0;      ///< RF oscillator linewidth [Hz]
    double symbol_rate = 20e9;      ///< [Bd]
    double snr_db = 22.549008301237;  ///< Es/N0 per symbol [dB], Es = 1
    int n_symbols = 20000;          ///< block length N per channel
    double pilot_rate = 0.01;       ///< alpha_p
    std::uint64_t seed = 1;

    int half_width() const noexcept { return (channels - 1) / 2; }
    double symbol_period() const noexcept { return 1.0 / symbol_rate; }
    /// Per-symbol increment variance of theta^c [rad^2].
    double sigma2_c() const noexcept { return 2.0 * std::numbers::pi * delta_nu_c / symbol_rate; }
    /// Per-symbol increment variance of theta^r [rad^2].
    double sigma2_r() const noexcept { return 2.0 * std::numbers::pi * delta_nu_r / symbol_rate; }
    /// Total complex AWGN variance N0 for unit symbol energy.
    double noise_var() const noexcept { return std::pow(10.0, -snr_db / 10.0); }
    /// Row of channel index m.
    int row_of(int m) const noexcept { return m + half_width(); }

    void validate() const {
        detail::require(channels >= 3 && channels % 2 == 1,
                        "channel count L must be odd and >= 3, got " + std::to_string(channels));
        detail::require(delta_nu_c >= 0.0 && delta_nu_r >= 0.0, "linewidths must be non-negative");
        detail::require(symbol_rate > 0.0, "symbol rate must be positive");
        detail::require(n_symbols >= 2, "block length must be >= 2");
        detail::require(pilot_rate > 0.0 && pilot_rate <= 1.0, "pilot rate must lie in (0, 1]");
        detail::require(std::isfinite(snr_db), "snr_db must be finite");
    }
};

/// The two source random walks over one block.
struct PhaseTrace {
    int channels = 0;  ///< L of the comb the trace belongs to
    std::vector<double> theta_c;
    std::vector<double> theta_r;

    std::size_t size() const noexcept { return theta_c.size(); }
};

inline PhaseTrace gen_phase_trace(const SystemParams& params, RandomStream& rng) {
    const auto n = static_cast<std::size_t>(params.n_symbols);
    const double sc = std::sqrt(params.sigma2_c());
    const double sr = std::sqrt(params.sigma2_r());
    PhaseTrace t;
    t.channels = params.channels;
    t.theta_c.resize(n);
    t.theta_r.resize(n);
    t.theta_c[0] = rng.uniform_phase();
    t.theta_r[0] = rng.uniform_phase();
    for (std::size_t k = 1; k < n; ++k) {
        t.theta_c[k] = t.theta_c[k - 1] + sc * rng.normal();
        t.theta_r[k] = t.theta_r[k - 1] + sr * rng.normal();
    }
    return t;
}

/// Total (unwrapped) phase of channel m at time k.
inline double channel_phase(const PhaseTrace& trace, int m, std::size_t k) {
    const int half = (trace.channels - 1) / 2;
    if (m < -half || m > half)
        throw InvalidArgument("channel index " + std::to_string(m) + " outside [-" + std::to_string(half) +
                              ", " + std::to_string(half) + "]");
    if (k >= trace.size()) throw InvalidArgument("time index " + std::to_string(k) + " out of range");
    return trace.theta_c[k] + m * trace.theta_r[k];
}

/// L x N grid of true channel phases.
inline RealGrid channel_phases(const PhaseTrace& trace) {
    const int channels = trace.channels;
    const int half = (channels - 1) / 2;
    const auto n = static_cast<Eigen::Index>(trace.size());
    RealGrid out(channels, n);
    for (int r = 0; r < channels; ++r)
        for (Eigen::Index k = 0; k < n; ++k)
            out(r, k) = trace.theta_c[k] + (r - half) * trace.theta_r[k];
    return out;
}

inline MixingMatrix mixing_matrix(int channels) {
    detail::require(channels >= 3 && channels % 2 == 1,
                    "mixing matrix needs odd L >= 3, got " + std::to_string(channels));
    const int half = (channels - 1) / 2;
    MixingMatrix t(channels, 2);
    for (int r = 0; r < channels; ++r) {
        t(r, 0) = 1.0;
        t(r, 1) = r - half;
    }
    return t;
}

/// y = exp(j*theta) * (x + z), z circular Gaussian with total variance noise_var
/// (noise_var / 2 per quadrature).
inline ChannelGrid apply_channel(const ChannelGrid& tx, const PhaseTrace& trace, double noise_var,
                                 RandomStream& rng) {
    if (static_cast<std::size_t>(tx.cols()) != trace.size())
        throw InvalidArgument("grid has " + std::to_string(tx.cols()) + " columns, trace has " +
                              std::to_string(trace.size()) + " samples");
    if (tx.rows() != trace.channels)
        throw InvalidArgument("grid has " + std::to_string(tx.rows()) + " rows, trace describes " +
                              std::to_string(trace.channels) + " channels");
    detail::require(noise_var >= 0.0, "noise variance must be non-negative");
    const double s = std::sqrt(noise_var / 2.0);
    const auto half = static_cast<int>((tx.rows() - 1) / 2);
    ChannelGrid y(tx.rows(), tx.cols());
    for (Eigen::Index r = 0; r < tx.rows(); ++r) {
        const int m = static_cast<int>(r) - half;
        for (Eigen::Index k = 0; k < tx.cols(); ++k) {
            const double re = rng.normal();
            const double im = rng.normal();
            const cplx z = noise_var > 0.0 ? cplx(s * re, s * im) : cplx(0.0, 0.0);
            y(r, k) = std::polar(1.0, trace.theta_c[k] + m * trace.theta_r[k]) * (tx(r, k) + z);
        }
    }
    return y;
}

}  // namespace eofc

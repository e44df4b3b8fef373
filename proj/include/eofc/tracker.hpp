#pragma once

// Pilot-aided phase trackers.
//
// Every tracker is a forward extended Kalman filter driven only by pilot
// observations, followed by a fixed-interval (Rauch-Tung-Striebel) backward
// pass. Observations are the pilot-derotated angle arg(y * conj(p)) with a
// small-error variance N0 / (2 |p|^2); the innovation is wrapped to [-pi, pi)
// so the state stays on the unwrapped branch it was initialised on.

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eofc/error.hpp"
#include "eofc/model.hpp"
#include "eofc/optimizer.hpp"
#include "eofc/pilots.hpp"

namespace eofc {

enum class TrackerVariant {
    ra_per_channel,   ///< scalar smoother per reference channel + projection
    joint_two_state,  ///< [theta^c, theta^r] smoother over all pilots
    pilot_interp,     ///< per-pilot angle, unwrap, linear interpolation
};

inline const char* to_string(TrackerVariant v) noexcept {
    switch (v) {
        case TrackerVariant::ra_per_channel: return "ra_per_channel";
        case TrackerVariant::joint_two_state: return "joint_two_state";
        case TrackerVariant::pilot_interp: return "pilot_interp";
    }
    return "?";
}

struct TrackerConfig {
    TrackerVariant variant = TrackerVariant::ra_per_channel;
    double init_cov = std::numbers::pi * std::numbers::pi / 3.0;  ///< variance of U[-pi, pi)
    double meas_floor = 1e-9;

    void validate() const {
        detail::require(init_cov > 0.0, "init_cov must be positive");
        detail::require(meas_floor > 0.0, "meas_floor must be positive");
    }
};

struct PhaseMeasurement {
    double angle;     ///< rad, in [-pi, pi)
    double variance;  ///< rad^2
};

inline PhaseMeasurement phase_measurement(std::complex<double> y, std::complex<double> pilot, double noise_var,
                                          double meas_floor = 1e-9) {
    const double e = std::norm(pilot);
    if (!(e > 0.0)) throw InvalidArgument("pilot symbol must be non-zero");
    return {wrap_angle(std::arg(y * std::conj(pilot))), std::max(noise_var / (2.0 * e), meas_floor)};
}

/// Scalar random-walk phase filter with wrapped innovations.
class ScalarPhaseKalman {
public:
    ScalarPhaseKalman(double mean, double variance) : mean_(mean), var_(variance) {}

    void predict(double process_var) { var_ += process_var; }

    /// Returns the Kalman gain used.
    double update(const PhaseMeasurement& z) {
        const double gain = var_ / (var_ + z.variance);
        mean_ += gain * wrap_angle(z.angle - mean_);
        var_ *= (1.0 - gain);
        return gain;
    }

    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return var_; }

private:
    double mean_;
    double var_;
};

/// Smoothed track of one channel.
struct ChannelTrack {
    std::vector<double> mean;               ///< smoothed, unwrapped [rad]
    std::vector<double> variance;           ///< smoothed posterior variance [rad^2]
    std::vector<double> filtered_variance;  ///< forward-pass posterior variance [rad^2]
};

namespace detail {

inline std::size_t count_pilots(std::span<const bool> row) {
    std::size_t n = 0;
    for (bool b : row) n += b;
    return n;
}

inline std::span<const bool> mask_row(const BoolGrid& mask, Eigen::Index r) {
    return {mask.data() + r * mask.cols(), static_cast<std::size_t>(mask.cols())};
}

inline std::span<const std::complex<double>> grid_row(const ChannelGrid& g, Eigen::Index r) {
    return {g.data() + r * g.cols(), static_cast<std::size_t>(g.cols())};
}

}  // namespace detail

/// Extended Kalman smoother for the phase of channel m, observed only at the
/// slots marked in pilot_row. The process variance per slot is
/// sigma_c^2 + m^2 sigma_r^2. `initial_mean` selects the 2*pi branch.
inline ChannelTrack track_reference_channel(std::span<const std::complex<double>> y_row,
                                            std::span<const bool> pilot_row, std::complex<double> pilot, int m,
                                            const SystemParams& params, const TrackerConfig& cfg,
                                            double initial_mean = 0.0) {
    cfg.validate();
    if (y_row.size() != pilot_row.size()) throw InvalidArgument("sample row and pilot row differ in length");
    if (detail::count_pilots(pilot_row) < 2)
        throw Unobservable("channel " + std::to_string(m) + " has fewer than two pilots; phase drift is unobservable");
    const double q = params.sigma2_c() + static_cast<double>(m) * m * params.sigma2_r();
    const double n0 = params.noise_var();
    const std::size_t n = y_row.size();

    ChannelTrack out;
    out.mean.resize(n);
    out.variance.resize(n);
    out.filtered_variance.resize(n);

    ScalarPhaseKalman kf(initial_mean, cfg.init_cov);
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) kf.predict(q);
        if (pilot_row[k]) kf.update(phase_measurement(y_row[k], pilot, n0, cfg.meas_floor));
        out.mean[k] = kf.mean();
        out.filtered_variance[k] = kf.variance();
    }

    out.variance[n - 1] = out.filtered_variance[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
        const double pf = out.filtered_variance[k];
        const double pp = pf + q;
        const double c = pp > 0.0 ? pf / pp : 0.0;
        out.mean[k] += c * (out.mean[k + 1] - out.mean[k]);
        out.variance[k] = pf + c * c * (out.variance[k + 1] - pp);
    }
    return out;
}

/// Smoothed [theta^c, theta^r] track from the joint two-state smoother.
struct JointTrack {
    Eigen::Matrix<double, 2, Eigen::Dynamic> mean;
    std::vector<Eigen::Matrix2d> covariance;
    std::vector<Eigen::Matrix2d> filtered_covariance;
};

struct PhaseEstimate {
    RealGrid theta_hat;                          ///< L x N, unwrapped [rad]
    Eigen::Matrix<double, 2, Eigen::Dynamic> sources;  ///< estimated [theta^c; theta^r] per slot
    std::vector<double> est_error_sq;            ///< per-slot sum over channels, when scored

    int channels() const noexcept { return static_cast<int>(theta_hat.rows()); }

    /// Mean of est_error_sq over all slots (rad^2); requires score_against().
    double mean_est_error() const {
        if (est_error_sq.empty()) throw Error("estimate has not been scored against ground truth");
        double s = 0.0;
        for (double e : est_error_sq) s += e;
        return s / static_cast<double>(est_error_sq.size());
    }
};

/// Fills est_error_sq with sum_m wrap(theta_{m,k} - theta_hat_{m,k})^2.
inline void score_against(PhaseEstimate& est, const PhaseTrace& truth) {
    if (static_cast<std::size_t>(est.theta_hat.cols()) != truth.size() || est.theta_hat.rows() != truth.channels)
        throw InvalidArgument("estimate and ground truth differ in shape");
    const int half = (truth.channels - 1) / 2;
    est.est_error_sq.assign(truth.size(), 0.0);
    for (Eigen::Index r = 0; r < est.theta_hat.rows(); ++r) {
        const int m = static_cast<int>(r) - half;
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const double e = wrap_angle(truth.theta_c[k] + m * truth.theta_r[k] -
                                        est.theta_hat(r, static_cast<Eigen::Index>(k)));
            est.est_error_sq[k] += e * e;
        }
    }
}

/// Joint smoother over every pilot in the mask; returns the track and the
/// per-channel projection theta^c + m theta^r.
inline JointTrack track_joint_states(const ChannelGrid& y, const PilotPattern& pattern, const SystemParams& params,
                                     const TrackerConfig& cfg, Eigen::Vector2d initial_state = Eigen::Vector2d::Zero()) {
    cfg.validate();
    if (y.rows() != pattern.mask.rows() || y.cols() != pattern.mask.cols())
        throw InvalidArgument("sample grid and pilot mask differ in shape");
    const int half = static_cast<int>((y.rows() - 1) / 2);
    int observed_rows = 0;
    for (Eigen::Index r = 0; r < pattern.mask.rows(); ++r) observed_rows += pattern.mask.row(r).any();
    if (observed_rows < 2)
        throw Unobservable("pilots occupy fewer than two distinct channels; theta^r is unobservable");

    const auto n = static_cast<std::size_t>(y.cols());
    const Eigen::Matrix2d proc = Eigen::Vector2d(params.sigma2_c(), params.sigma2_r()).asDiagonal();
    const double n0 = params.noise_var();

    JointTrack out;
    out.mean.resize(2, static_cast<Eigen::Index>(n));
    out.covariance.resize(n);
    out.filtered_covariance.resize(n);

    Eigen::Vector2d x = initial_state;
    Eigen::Matrix2d p = Eigen::Matrix2d::Identity() * cfg.init_cov;
    for (std::size_t k = 0; k < n; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        if (k > 0) p += proc;
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            if (!pattern.mask(r, kk)) continue;
            const double m = static_cast<double>(static_cast<int>(r) - half);
            const auto z = phase_measurement(y(r, kk), pattern.pilot_point, n0, cfg.meas_floor);
            const Eigen::RowVector2d h(1.0, m);
            const Eigen::Vector2d ph = p * h.transpose();
            const double s = h.dot(ph) + z.variance;
            const Eigen::Vector2d gain = ph / s;
            x += gain * wrap_angle(z.angle - h.dot(x));
            const Eigen::Matrix2d a = Eigen::Matrix2d::Identity() - gain * h;
            p = a * p * a.transpose() + gain * z.variance * gain.transpose();
        }
        out.mean.col(kk) = x;
        out.filtered_covariance[k] = p;
    }

    out.covariance[n - 1] = out.filtered_covariance[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) {
        const auto kk = static_cast<Eigen::Index>(k);
        const Eigen::Matrix2d& pf = out.filtered_covariance[k];
        const Eigen::Matrix2d pp = pf + proc;
        const Eigen::Matrix2d c = pf * pp.inverse();
        const Eigen::Vector2d next = out.mean.col(kk + 1);
        out.mean.col(kk) += c * (next - out.mean.col(kk));
        out.covariance[k] = pf + c * (out.covariance[k + 1] - pp) * c.transpose();
    }
    return out;
}

inline PhaseEstimate track_joint(const ChannelGrid& y, const PilotPattern& pattern, const SystemParams& params,
                                 const TrackerConfig& cfg, Eigen::Vector2d initial_state = Eigen::Vector2d::Zero()) {
    auto track = track_joint_states(y, pattern, params, cfg, initial_state);
    PhaseEstimate est;
    est.theta_hat = mixing_matrix(static_cast<int>(y.rows())) * track.mean;
    est.sources = std::move(track.mean);
    return est;
}

/// theta_hat = (T Q^+) theta_hat^D, column by column.
inline PhaseEstimate ra_project(const RealGrid& theta_hat_refs, const ReferenceSet& dset) {
    if (theta_hat_refs.rows() != dset.size())
        throw InvalidArgument("reference estimate has " + std::to_string(theta_hat_refs.rows()) +
                              " rows, reference set has " + std::to_string(dset.size()) + " channels");
    PhaseEstimate est;
    est.theta_hat = dset.proj * theta_hat_refs;
    est.sources = dset.q_pinv * theta_hat_refs;
    return est;
}

/// Per-pilot angles unwrapped along time, linearly interpolated between pilots
/// and held constant beyond the first and last pilot. The first pilot angle
/// is placed on the 2*pi branch nearest `anchor`.
inline std::vector<double> pilot_interp_baseline(std::span<const std::complex<double>> y_row,
                                                 std::span<const bool> pilot_row, std::complex<double> pilot,
                                                 const SystemParams& params, double anchor = 0.0) {
    if (y_row.size() != pilot_row.size()) throw InvalidArgument("sample row and pilot row differ in length");
    if (detail::count_pilots(pilot_row) < 2)
        throw Unobservable("fewer than two pilots; cannot interpolate");
    std::vector<std::size_t> at;
    std::vector<double> ang;
    for (std::size_t k = 0; k < y_row.size(); ++k) {
        if (!pilot_row[k]) continue;
        const double a = phase_measurement(y_row[k], pilot, params.noise_var()).angle;
        const double ref = ang.empty() ? anchor : ang.back();
        at.push_back(k);
        ang.push_back(ref + wrap_angle(a - ref));
    }
    std::vector<double> out(y_row.size());
    std::size_t seg = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k <= at.front()) {
            out[k] = ang.front();
        } else if (k >= at.back()) {
            out[k] = ang.back();
        } else {
            while (at[seg + 1] < k) ++seg;
            const double t = static_cast<double>(k - at[seg]) / static_cast<double>(at[seg + 1] - at[seg]);
            out[k] = ang[seg] + t * (ang[seg + 1] - ang[seg]);
        }
    }
    return out;
}

/// Debug dump: k, theta_c, theta_c_hat, theta_r, theta_r_hat.
inline void write_source_csv(std::ostream& os, const PhaseTrace& truth, const PhaseEstimate& est) {
    if (static_cast<std::size_t>(est.sources.cols()) != truth.size())
        throw InvalidArgument("estimate and ground truth differ in length");
    os << "k,theta_c,theta_c_hat,theta_r,theta_r_hat\n";
    char buf[160];
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g\n", k, truth.theta_c[k], est.sources(0, kk),
                      truth.theta_r[k], est.sources(1, kk));
        os << buf;
    }
}

}  // namespace eofc

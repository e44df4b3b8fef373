#pragma once

// Pilot layouts on the L x N channel/time grid.
//
//  RAT: every reference channel carries a pilot at the same time slots
//       0, s, 2s, ...; other channels carry none. Requires alpha_p <= D/L.
//  WDT: one pilot per pilot slot, walking diagonally over the channels
//       -M, -M+1, ..., M, -M, ... Requires alpha_p <= 1/L.
// The spacing s is the smallest integer that keeps the pilot rate at or below
// alpha_p, and slot k = 0 always carries a pilot.

#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "eofc/error.hpp"
#include "eofc/model.hpp"
#include "eofc/modem.hpp"
#include "eofc/optimizer.hpp"

namespace eofc {

enum class PilotScheme { rat, wdt };

inline const char* to_string(PilotScheme s) noexcept { return s == PilotScheme::rat ? "RAT" : "WDT"; }

inline const Constellation& default_constellation() {
    static const Constellation c = Constellation::square_qam(64);
    return c;
}

struct PilotPattern {
    PilotScheme kind = PilotScheme::rat;
    std::optional<ReferenceSet> reference_set;  ///< RAT only
    BoolGrid mask;                              ///< L x N, true = pilot
    int time_spacing = 1;
    std::uint32_t pilot_symbol = 0;
    std::complex<double> pilot_point;

    int channels() const noexcept { return static_cast<int>(mask.rows()); }
    int n_symbols() const noexcept { return static_cast<int>(mask.cols()); }
    std::int64_t pilot_count() const { return mask.count(); }
    double pilot_fraction() const { return static_cast<double>(pilot_count()) / static_cast<double>(mask.size()); }
    std::int64_t pilots_in_channel(int m) const { return mask.row(m + (channels() - 1) / 2).count(); }
    BoolGrid data_mask() const { return !mask; }
};

namespace detail {

// Smallest s >= 1 with s >= ratio; the epsilon absorbs rounding in
// alpha_p * L for exactly representable targets such as 1/7 * 7.
inline int pilot_spacing(double ratio) {
    const double s = std::ceil(ratio - 1e-9);
    return s < 1.0 ? 1 : static_cast<int>(s);
}

inline PilotPattern empty_pattern(const SystemParams& params, PilotScheme kind, const Constellation& c) {
    PilotPattern p;
    p.kind = kind;
    p.mask = BoolGrid::Constant(params.channels, params.n_symbols, false);
    p.pilot_symbol = c.pilot_symbol();
    p.pilot_point = c.point(p.pilot_symbol);
    return p;
}

}  // namespace detail

inline PilotPattern make_rat(const SystemParams& params, const ReferenceSet& dset,
                             const Constellation& c = default_constellation()) {
    params.validate();
    if (dset.channels != params.channels)
        throw InvalidArgument("reference set was built for L = " + std::to_string(dset.channels) +
                              ", parameters have L = " + std::to_string(params.channels));
    const double bound = static_cast<double>(dset.size()) / params.channels;
    if (params.pilot_rate > bound * (1.0 + 1e-12))
        throw RateInfeasible("RAT pilot rate " + std::to_string(params.pilot_rate) + " exceeds D/L = " +
                             std::to_string(bound));
    auto p = detail::empty_pattern(params, PilotScheme::rat, c);
    p.reference_set = dset;
    p.time_spacing = detail::pilot_spacing(bound / params.pilot_rate);
    for (int d : dset.indices) {
        const int row = params.row_of(d);
        for (int k = 0; k < params.n_symbols; k += p.time_spacing) p.mask(row, k) = true;
    }
    return p;
}

inline PilotPattern make_wdt(const SystemParams& params, const Constellation& c = default_constellation()) {
    params.validate();
    const double bound = 1.0 / params.channels;
    if (params.pilot_rate > bound * (1.0 + 1e-12))
        throw RateInfeasible("WDT pilot rate " + std::to_string(params.pilot_rate) + " exceeds 1/L = " +
                             std::to_string(bound));
    auto p = detail::empty_pattern(params, PilotScheme::wdt, c);
    p.time_spacing = detail::pilot_spacing(bound / params.pilot_rate);
    int i = 0;
    for (int k = 0; k < params.n_symbols; k += p.time_spacing, ++i) p.mask(i % params.channels, k) = true;
    return p;
}

/// Plain PBM (P1): one raster row per channel (m = -M first), '1' = pilot.
inline void write_pbm(std::ostream& os, const PilotPattern& p) {
    os << "P1\n" << p.mask.cols() << ' ' << p.mask.rows() << '\n';
    for (Eigen::Index r = 0; r < p.mask.rows(); ++r) {
        for (Eigen::Index k = 0; k < p.mask.cols(); ++k) os << (p.mask(r, k) ? '1' : '0');
        os << '\n';
    }
}

inline std::string to_pbm(const PilotPattern& p) {
    std::ostringstream os;
    write_pbm(os, p);
    return os.str();
}

/// Reads a plain PBM raster written by write_pbm (comments and whitespace allowed).
inline BoolGrid read_pbm(std::istream& is) {
    std::string magic;
    is >> magic;
    if (magic != "P1") throw InvalidArgument("not a plain PBM stream");
    auto next_token = [&]() {
        std::string tok;
        while (is >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(is, rest);
                continue;
            }
            return tok;
        }
        throw InvalidArgument("truncated PBM header");
    };
    const long width = std::stol(next_token());
    const long height = std::stol(next_token());
    if (width <= 0 || height <= 0) throw InvalidArgument("bad PBM dimensions");
    BoolGrid mask(height, width);
    for (long i = 0; i < width * height; ++i) {
        char ch = 0;
        do {
            if (!is.get(ch)) throw InvalidArgument("truncated PBM raster");
        } while (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t');
        if (ch != '0' && ch != '1') throw InvalidArgument("unexpected PBM pixel character");
        mask(i / width, i % width) = (ch == '1');
    }
    return mask;
}

}  // namespace eofc

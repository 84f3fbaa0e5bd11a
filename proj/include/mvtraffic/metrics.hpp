#pragma once

// Traffic and quality statistics: per-view frame size moments, merged and
// combined stream variability, demand CoV, average PSNR, and RD/VD curves.
//
// Sums of sizes and of squared sizes are accumulated in 128-bit integers, so
// every variance is exact up to the final conversion to double.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvtraffic/streamshape.hpp"
#include "mvtraffic/trace.hpp"

namespace mvt {

// Which denominator produced a variance.
//   Paper:    the sequential-merge variance with (M-1)(V-1), as originally published.
//   Standard: the ordinary sample variance, n-1.
enum class Normalization { Paper, Standard };

std::string_view to_string(Normalization n) noexcept;

struct StreamStats {
    double mean_frame_size = 0.0;  // bytes
    double variance = 0.0;         // bytes^2
    double std_dev = 0.0;          // bytes
    double cov = 0.0;
    double mean_bitrate = 0.0;     // bit/s
    std::int64_t sample_count = 0;
    Normalization normalization = Normalization::Standard;
};

// Mean, sample variance over M-1, CoV and bitrate 8 f mean of one view.
// Requires 1 <= v <= V and M >= 2.
StreamStats view_stats(const MultiviewTrace& trace, int v);

struct MergedMean {
    double mean_frame_size = 0.0;  // bytes, averaged over views
    double mean_bitrate = 0.0;     // bit/s, 8 V f mean
};

MergedMean merged_mean(const MultiviewTrace& trace);

// Variability of the round-robin merged stream. Paper normalization requires V >= 2.
StreamStats sequential_variability(const MultiviewTrace& trace, Normalization normalization = Normalization::Paper);

// Variability of the combined multiview frames X_m; CoV relative to V * mean.
StreamStats combined_variability(const MultiviewTrace& trace);

// Sample CoV (denominator T-1) of per-period demand. Requires T >= 2 and a positive mean.
double demand_cov(const DemandSequence& demand);

// Arithmetic mean in dB over all V*M frames. Throws PreconditionError when any PSNR is missing.
double average_psnr(const MultiviewTrace& trace);

// How an encoding is streamed when its VD point is computed.
struct Shaping {
    enum class Kind { View, Sequential, Combined, Smoothed };

    Kind kind = Kind::Combined;
    int view = 1;          // Kind::View
    int gop = 0;           // Kind::Smoothed; 0 means the trace's own GoP length
    Normalization normalization = Normalization::Paper;  // Kind::Sequential

    static Shaping per_view(int v) { return {Kind::View, v, 0, Normalization::Paper}; }
    static Shaping sequential(Normalization n = Normalization::Paper) { return {Kind::Sequential, 1, 0, n}; }
    static Shaping combined() { return {Kind::Combined, 1, 0, Normalization::Paper}; }
    static Shaping smoothed(int gop = 0) { return {Kind::Smoothed, 1, gop, Normalization::Paper}; }

    std::string label() const;
};

// Parses "view", "view<v>", "S", "S-standard", "C", "smooth" or "smooth<G>".
Shaping parse_shaping(std::string_view text);

// CoV of the trace streamed with the given shaping.
double shaped_cov(const MultiviewTrace& trace, const Shaping& shaping);

struct CurvePoint {
    enum class Kind { RD, VD };

    Kind kind = Kind::RD;
    double avg_bitrate = 0.0;  // bit/s, RD only
    double avg_psnr = 0.0;     // dB
    double cov = 0.0;          // VD only
    std::string label;
};

struct Encoding {
    const MultiviewTrace* trace = nullptr;
    Shaping shaping;
};

// One RD and one VD point per encoding; each kind sorted by ascending PSNR,
// RD points first.
std::vector<CurvePoint> build_curves(std::span<const Encoding> encodings);

}  // namespace mvt

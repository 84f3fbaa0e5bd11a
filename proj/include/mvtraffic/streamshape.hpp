#pragma once

// Streaming transforms: sequential merging, combining, and GoP smoothing.

#include <cstdint>
#include <vector>

#include "mvtraffic/trace.hpp"

namespace mvt {

// V*M frame sizes in round-robin view order, each sent over 1/(V f).
struct MergedSequence {
    std::vector<std::int64_t> sizes;  // bytes
    double unit_duration = 0.0;       // seconds
    TraceMeta source;
};

// M multiview frame sizes X_m = sum_v X_m(v), each sent over 1/f.
struct CombinedSequence {
    std::vector<std::int64_t> sizes;  // bytes
    double unit_duration = 0.0;       // seconds
    TraceMeta source;
};

// Bits offered to the link in each frame period.
struct DemandSequence {
    std::vector<std::int64_t> demand;  // bits
    double frame_rate = 24.0;

    std::size_t period_count() const noexcept { return demand.size(); }
    std::int64_t total() const noexcept;
    std::int64_t max() const noexcept;
    bool operator==(const DemandSequence&) const = default;
};

MergedSequence sequential_merge(const MultiviewTrace& trace);
CombinedSequence combine(const MultiviewTrace& trace);

// demand_m = 8 * X_m.
DemandSequence to_demand(const CombinedSequence& seq);

// Replaces every block of `gop` consecutive periods with its mean, in exact
// integer bits: a block of total B over L periods gets floor(B/L) per period
// and the remainder is handed out one bit per period from the block start.
// Blocks start at period 1 + offset and run cyclically; when gop does not
// divide T the last block is shorter and averaged over its own length.
// Throws PreconditionError when gop < 1, gop > T or offset >= gop.
DemandSequence gop_smooth(const DemandSequence& demand, int gop, int offset = 0);

}  // namespace mvt

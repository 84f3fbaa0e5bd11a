#include "mvtraffic/streamshape.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "mvtraffic/error.hpp"

namespace mvt {

std::int64_t DemandSequence::total() const noexcept {
    return std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
}

std::int64_t DemandSequence::max() const noexcept {
    return demand.empty() ? 0 : *std::max_element(demand.begin(), demand.end());
}

MergedSequence sequential_merge(const MultiviewTrace& trace) {
    const auto& meta = trace.meta();
    MergedSequence out;
    out.source = meta;
    out.unit_duration = 1.0 / (meta.num_views * meta.frame_rate);
    out.sizes.reserve(static_cast<std::size_t>(meta.num_views * meta.num_frames));
    for (std::int64_t m = 1; m <= meta.num_frames; ++m)
        for (int v = 1; v <= meta.num_views; ++v) out.sizes.push_back(trace.size(m, v));
    return out;
}

CombinedSequence combine(const MultiviewTrace& trace) {
    const auto& meta = trace.meta();
    CombinedSequence out;
    out.source = meta;
    out.unit_duration = 1.0 / meta.frame_rate;
    out.sizes.assign(static_cast<std::size_t>(meta.num_frames), 0);
    for (const auto& view : trace.views())
        for (std::size_t i = 0; i < view.size(); ++i) out.sizes[i] += view[i].size;
    return out;
}

DemandSequence to_demand(const CombinedSequence& seq) {
    DemandSequence out;
    out.frame_rate = seq.source.frame_rate;
    out.demand.reserve(seq.sizes.size());
    for (auto bytes : seq.sizes) out.demand.push_back(8 * bytes);
    return out;
}

DemandSequence gop_smooth(const DemandSequence& demand, int gop, int offset) {
    const auto periods = static_cast<std::int64_t>(demand.period_count());
    if (gop < 1) throw PreconditionError("gop_smooth: G must be >= 1");
    if (offset < 0 || offset >= gop) throw PreconditionError("gop_smooth: alignment offset must lie in [0, G)");
    if (gop > periods)
        throw PreconditionError("gop_smooth: G = " + std::to_string(gop) + " exceeds period count " +
                                std::to_string(periods));

    DemandSequence out;
    out.frame_rate = demand.frame_rate;
    out.demand.assign(demand.demand.size(), 0);

    auto at = [&](std::int64_t k) { return static_cast<std::size_t>((offset + k) % periods); };
    for (std::int64_t start = 0; start < periods; start += gop) {
        const std::int64_t len = std::min<std::int64_t>(gop, periods - start);
        std::int64_t bits = 0;
        for (std::int64_t k = 0; k < len; ++k) bits += demand.demand[at(start + k)];
        const std::int64_t share = bits / len;
        const std::int64_t extra = bits % len;
        for (std::int64_t k = 0; k < len; ++k) out.demand[at(start + k)] = share + (k < extra ? 1 : 0);
    }
    return out;
}

}  // namespace mvt

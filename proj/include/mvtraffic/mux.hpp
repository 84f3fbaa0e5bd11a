#pragma once

// Bufferless statistical multiplexer.
//
// J copies of one demand sequence, each started at its own frame (phase) and
// wrapping around at the end, feed a link that carries at most C/f bits per
// frame period. Bits above that budget are lost in the period they arrive;
// nothing carries over. The information loss probability is lost bits over
// offered bits.

#include <cstdint>
#include <span>
#include <vector>

#include "mvtraffic/streamshape.hpp"

namespace mvt {

class MuxScenario {
public:
    // Budget is floor(C / f) bits per period.
    MuxScenario(DemandSequence demand, int streams, double link_rate);

    // Scenario whose link rate is exactly budget * f.
    static MuxScenario with_budget(DemandSequence demand, int streams, std::int64_t budget);

    const DemandSequence& demand() const noexcept { return demand_; }
    int streams() const noexcept { return streams_; }
    double link_rate() const noexcept { return link_rate_; }
    double frame_rate() const noexcept { return demand_.frame_rate; }
    std::int64_t budget() const noexcept { return budget_; }
    std::int64_t periods() const noexcept { return static_cast<std::int64_t>(demand_.demand.size()); }

    // Bits offered by all streams over one replication: J * total demand.
    std::int64_t offered_bits() const noexcept { return offered_; }

    // True when the budget covers J copies of the peak demand, so no phase
    // combination can lose anything.
    bool trivially_lossless() const noexcept { return budget_ >= static_cast<std::int64_t>(streams_) * demand_.max(); }

private:
    MuxScenario(DemandSequence demand, int streams, double link_rate, std::int64_t budget);

    DemandSequence demand_;
    int streams_;
    double link_rate_;
    std::int64_t budget_;
    std::int64_t offered_;
};

// floor(C / f) computed so that budget * f <= C < (budget + 1) * f.
std::int64_t period_budget(double link_rate, double frame_rate);

struct ReplicationResult {
    std::int64_t lost_bits = 0;
    std::int64_t offered_bits = 0;
    double loss_ratio = 0.0;
    std::vector<std::int64_t> phases;  // 1-based starting frames
};

// Transmits M periods. Stream j offers demand[((phase_j + t - 2) mod M) + 1]
// in period t = 1..M. Throws PreconditionError on a phase outside [1, M] or a
// phase count different from J.
ReplicationResult simulate_replication(const MuxScenario& scenario, std::span<const std::int64_t> phases);

// Lost bits of one replication, without building a ReplicationResult.
std::int64_t replication_lost_bits(const MuxScenario& scenario, std::span<const std::int64_t> phases);

// Per-period lost bits (length M); used by the monotonicity checks.
std::vector<std::int64_t> period_losses(const MuxScenario& scenario, std::span<const std::int64_t> phases);

// Starting frame of stream `stream` (0-based) in replication `replication`.
// Depends only on (seed, replication, stream, M), so the first J streams of a
// replication see the same phases whatever the total stream count is.
std::int64_t replication_phase(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream,
                               std::int64_t periods) noexcept;

void replication_phases(std::uint64_t seed, std::uint64_t replication, std::int64_t periods,
                        std::span<std::int64_t> out) noexcept;

inline constexpr std::uint64_t kDefaultEnumerationLimit = 10'000'000;

// Mean loss ratio over all M^J phase tuples. Throws PreconditionError when
// M^J exceeds `limit`.
double exact_loss_oracle(const MuxScenario& scenario, std::uint64_t limit = kDefaultEnumerationLimit);

struct StopRule {
    double relative_half_width = 0.10;
    double confidence = 0.95;
    std::int64_t min_replications = 100;
    std::int64_t max_replications = 100'000;
};

struct LossEstimate {
    double p_hat = 0.0;           // mean of per-replication loss ratios
    double ci_half_width = 0.0;   // Student-t, at `confidence`
    double confidence = 0.95;
    std::int64_t replications = 0;
    bool zero_loss = false;       // no replication lost a bit
    bool converged = false;       // stopped by the relative-width rule, not by max_replications
    double pooled_ratio = 0.0;    // total lost / total offered
    double zero_loss_bound = 0.0; // 3 / replications when zero_loss, else 0
    double total_lost_bits = 0.0;  // summed over replications; may exceed 2^63
    std::int64_t offered_bits_per_replication = 0;
};

// Monte Carlo estimate of the information loss probability. Replication r
// (0-based) uses replication_phases(seed, r, ...). Replications are evaluated
// in parallel on `threads` workers (0 = hardware concurrency), but the
// stopping rule walks them in index order, so the estimate is identical for
// every thread count. When `per_replication_lost` is given it receives the
// lost bits of every replication counted in the estimate.
LossEstimate estimate_loss(const MuxScenario& scenario, std::uint64_t seed, const StopRule& stop = {},
                           unsigned threads = 1, std::vector<std::int64_t>* per_replication_lost = nullptr);

}  // namespace mvt

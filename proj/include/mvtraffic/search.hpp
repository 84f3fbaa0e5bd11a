#pragma once

// Loss-constrained capacity planning: the smallest link rate that carries J
// streams, and the largest stream count a given link rate carries, both
// subject to P_loss <= epsilon.
//
// Every candidate is evaluated with the same seed (common random numbers), so
// replication r of stream j starts at the same frame for every C and every J.
// Lost bits are then monotone in C and in J replication by replication, and
// the bisection over a noisy predicate stays well-posed.

#include <cstdint>

#include "mvtraffic/mux.hpp"

namespace mvt {

struct SearchConfig {
    double epsilon = 1e-5;
    std::int64_t runs = 500;
    std::int64_t sims_per_run = 1000;
    std::uint64_t seed = 1;
    double tolerance = 1e-3;           // relative bisection tolerance on C
    double expansion = 2.0;            // bracket growth/shrink factor
    int max_expansions = 64;
    double relative_half_width = 0.10; // CI stopping rule
    double confidence = 0.95;
    unsigned threads = 1;              // 0 = hardware concurrency

    // One run is the minimum, runs * sims_per_run the maximum replication count.
    StopRule stop_rule() const;
    void check() const;
};

// Feasible when the budget covers J x peak demand (no loss is possible), or
// when p_hat <= epsilon and, if no loss was observed at all, the rule-of-three
// bound 3/replications is also <= epsilon.
bool is_feasible(const MuxScenario& scenario, const LossEstimate& estimate, double epsilon) noexcept;

// Per-run loss ratios: replications are grouped in order into runs of
// sims_per_run; only complete runs are summarized.
struct RunSummary {
    std::int64_t runs = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct CapacityResult {
    double c_min = 0.0;          // bit/s; equals feasible_rate
    double feasible_rate = 0.0;  // bit/s, upper bracket end
    double infeasible_rate = 0.0;// bit/s, lower bracket end
    std::int64_t budget = 0;     // bits per period at c_min
    LossEstimate loss;           // at c_min
    RunSummary run_summary;      // at c_min
    std::int64_t evaluations = 0;
};

// Bisects over the integer per-period budget b (C = b * f), starting from
// [J * mean demand, J * max demand] and shrinking the lower end by
// `expansion` while it is still feasible. Stops when the bracket width is at
// most max(1 bit, tolerance * upper end). Throws PreconditionError on J < 1
// or all-zero demand.
CapacityResult find_cmin(const DemandSequence& demand, int streams, const SearchConfig& cfg);

struct AdmissionResult {
    int j_max = 0;
    std::int64_t budget = 0;    // floor(C / f)
    LossEstimate loss;          // at j_max; default-constructed when j_max = 0
    LossEstimate loss_next;     // at j_max + 1 (the first infeasible count)
    std::int64_t evaluations = 0;
};

// Doubles J until infeasible, then binary-searches the crossing.
AdmissionResult find_jmax(const DemandSequence& demand, double link_rate, const SearchConfig& cfg);

}  // namespace mvt

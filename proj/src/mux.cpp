#include "mvtraffic/mux.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mvtraffic/error.hpp"
#include "mvtraffic/rng.hpp"

namespace mvt {

std::int64_t period_budget(double link_rate, double frame_rate) {
    if (!(link_rate > 0.0) || !std::isfinite(link_rate)) throw PreconditionError("link rate C must be finite and > 0");
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) throw PreconditionError("frame rate f must be finite and > 0");
    const long double c = link_rate;
    const long double f = frame_rate;
    auto b = static_cast<std::int64_t>(std::floor(c / f));
    // Correct the quotient's rounding so that b * f <= C < (b + 1) * f holds exactly.
    while (b > 0 && static_cast<long double>(b) * f > c) --b;
    while (static_cast<long double>(b + 1) * f <= c) ++b;
    return b;
}

MuxScenario::MuxScenario(DemandSequence demand, int streams, double link_rate)
    : MuxScenario(std::move(demand), streams, link_rate, 0) {
    budget_ = period_budget(link_rate_, demand_.frame_rate);
}

MuxScenario::MuxScenario(DemandSequence demand, int streams, double link_rate, std::int64_t budget)
    : demand_(std::move(demand)), streams_(streams), link_rate_(link_rate), budget_(budget), offered_(0) {
    if (streams_ < 1) throw PreconditionError("stream count J must be >= 1");
    if (demand_.demand.empty()) throw PreconditionError("demand sequence is empty");
    if (!(demand_.frame_rate > 0.0)) throw PreconditionError("frame rate f must be > 0");
    for (auto d : demand_.demand)
        if (d < 0) throw PreconditionError("demand must be non-negative");
    if (budget_ < 0) throw PreconditionError("per-period budget must be >= 0");
    offered_ = static_cast<std::int64_t>(streams_) * demand_.total();
}

MuxScenario MuxScenario::with_budget(DemandSequence demand, int streams, std::int64_t budget) {
    const double rate = static_cast<double>(budget) * demand.frame_rate;
    return MuxScenario(std::move(demand), streams, rate, budget);
}

namespace {

void check_phases(const MuxScenario& s, std::span<const std::int64_t> phases) {
    if (static_cast<std::int64_t>(phases.size()) != s.streams())
        throw PreconditionError("expected " + std::to_string(s.streams()) + " phases, got " +
                                std::to_string(phases.size()));
    for (auto p : phases)
        if (p < 1 || p > s.periods())
            throw PreconditionError("phase " + std::to_string(p) + " outside [1, " + std::to_string(s.periods()) + "]");
}

// Fills `aggregate` with the per-period sum over streams. Each stream adds two
// contiguous runs of the demand: from its phase to the end, then the wrap.
void aggregate_demand(const MuxScenario& s, std::span<const std::int64_t> phases, std::vector<std::int64_t>& aggregate) {
    const auto& d = s.demand().demand;
    const std::size_t m = d.size();
    aggregate.assign(m, 0);
    for (auto phase : phases) {
        const auto start = static_cast<std::size_t>(phase - 1);
        const std::size_t head = m - start;
        for (std::size_t t = 0; t < head; ++t) aggregate[t] += d[start + t];
        for (std::size_t t = head; t < m; ++t) aggregate[t] += d[t - head];
    }
}

std::int64_t lost_from_aggregate(const std::vector<std::int64_t>& aggregate, std::int64_t budget) {
    std::int64_t lost = 0;
    for (auto a : aggregate) lost += a > budget ? a - budget : 0;
    return lost;
}

}  // namespace

std::int64_t replication_lost_bits(const MuxScenario& scenario, std::span<const std::int64_t> phases) {
    check_phases(scenario, phases);
    std::vector<std::int64_t> aggregate;
    aggregate_demand(scenario, phases, aggregate);
    return lost_from_aggregate(aggregate, scenario.budget());
}

std::vector<std::int64_t> period_losses(const MuxScenario& scenario, std::span<const std::int64_t> phases) {
    check_phases(scenario, phases);
    std::vector<std::int64_t> aggregate;
    aggregate_demand(scenario, phases, aggregate);
    for (auto& a : aggregate) a = std::max<std::int64_t>(0, a - scenario.budget());
    return aggregate;
}

ReplicationResult simulate_replication(const MuxScenario& scenario, std::span<const std::int64_t> phases) {
    ReplicationResult r;
    r.lost_bits = replication_lost_bits(scenario, phases);
    r.offered_bits = scenario.offered_bits();
    r.loss_ratio = r.offered_bits == 0 ? 0.0 : static_cast<double>(r.lost_bits) / static_cast<double>(r.offered_bits);
    r.phases.assign(phases.begin(), phases.end());
    return r;
}

std::int64_t replication_phase(std::uint64_t seed, std::uint64_t replication, std::uint64_t stream,
                               std::int64_t periods) noexcept {
    rng::SplitMix64 gen(rng::derive(seed, replication, stream));
    return 1 + static_cast<std::int64_t>(rng::bounded(gen, static_cast<std::uint64_t>(periods)));
}

void replication_phases(std::uint64_t seed, std::uint64_t replication, std::int64_t periods,
                        std::span<std::int64_t> out) noexcept {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = replication_phase(seed, replication, j, periods);
}

double exact_loss_oracle(const MuxScenario& scenario, std::uint64_t limit) {
    const auto m = static_cast<std::uint64_t>(scenario.periods());
    const int streams = scenario.streams();
    std::uint64_t tuples = 1;
    for (int j = 0; j < streams; ++j) {
        if (tuples > limit / m) throw PreconditionError("exact_loss_oracle: M^J exceeds enumeration limit " + std::to_string(limit));
        tuples *= m;
    }
    if (scenario.offered_bits() == 0) return 0.0;

    std::vector<std::int64_t> phases(static_cast<std::size_t>(streams), 1);
    std::vector<std::int64_t> aggregate;
    __int128 lost = 0;
    for (std::uint64_t k = 0; k < tuples; ++k) {
        aggregate_demand(scenario, phases, aggregate);
        lost += lost_from_aggregate(aggregate, scenario.budget());
        for (std::size_t j = 0; j < phases.size(); ++j) {
            if (++phases[j] <= scenario.periods()) break;
            phases[j] = 1;
        }
    }
    // Every tuple offers the same number of bits, so the mean ratio is total lost over total offered.
    const long double denom = static_cast<long double>(tuples) * static_cast<long double>(scenario.offered_bits());
    return static_cast<double>(static_cast<long double>(lost) / denom);
}

namespace {

void check_stop(const StopRule& stop) {
    if (stop.min_replications < 2) throw PreconditionError("stop rule: min replications must be >= 2");
    if (stop.max_replications < stop.min_replications)
        throw PreconditionError("stop rule: max replications must be >= min replications");
    if (!(stop.confidence > 0.0 && stop.confidence < 1.0)) throw PreconditionError("stop rule: confidence must lie in (0, 1)");
    if (!(stop.relative_half_width > 0.0)) throw PreconditionError("stop rule: relative half-width must be > 0");
}

// Running sums of per-replication lost bits, exact in 128-bit integers.
struct LostMoments {
    __int128 sum = 0;
    __int128 sum_sq = 0;
    std::int64_t n = 0;

    void add(std::int64_t lost) {
        sum += lost;
        sum_sq += static_cast<__int128>(lost) * lost;
        ++n;
    }

    long double mean() const { return static_cast<long double>(sum) / n; }

    // Sample variance (n - 1).
    long double variance() const {
        const __int128 scaled = static_cast<__int128>(n) * sum_sq - sum * sum;
        return static_cast<long double>(scaled) / (static_cast<long double>(n) * (n - 1));
    }
};

double t_quantile(double confidence, std::int64_t n) {
    boost::math::students_t dist(static_cast<double>(n - 1));
    return boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
}

void run_batch(const MuxScenario& s, std::uint64_t seed, std::int64_t first, std::int64_t count, unsigned threads,
               std::vector<std::int64_t>& lost) {
    lost.resize(static_cast<std::size_t>(first + count));
    auto work = [&](std::int64_t lo, std::int64_t hi) {
        std::vector<std::int64_t> phases(static_cast<std::size_t>(s.streams()));
        std::vector<std::int64_t> aggregate;
        for (std::int64_t r = lo; r < hi; ++r) {
            replication_phases(seed, static_cast<std::uint64_t>(r), s.periods(), phases);
            aggregate_demand(s, phases, aggregate);
            lost[static_cast<std::size_t>(r)] = lost_from_aggregate(aggregate, s.budget());
        }
    };
    const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(threads, count));
    if (workers <= 1) {
        work(first, first + count);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t w = 0; w < workers; ++w) {
        const std::int64_t lo = first + count * w / workers;
        const std::int64_t hi = first + count * (w + 1) / workers;
        pool.emplace_back(work, lo, hi);
    }
}

}  // namespace

LossEstimate estimate_loss(const MuxScenario& scenario, std::uint64_t seed, const StopRule& stop, unsigned threads,
                           std::vector<std::int64_t>* per_replication_lost) {
    check_stop(stop);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    const long double offered = static_cast<long double>(scenario.offered_bits());
    const double z = boost::math::quantile(boost::math::complement(boost::math::normal(), (1.0 - stop.confidence) / 2.0));

    std::vector<std::int64_t> lost;
    LostMoments mom;
    bool stopped = false;

    if (scenario.trivially_lossless() || scenario.offered_bits() == 0) {
        // Every replication loses nothing; the sequential rule never fires on a zero mean.
        lost.assign(static_cast<std::size_t>(stop.max_replications), 0);
        mom.n = stop.max_replications;
    } else {
        std::int64_t done = 0;
        while (!stopped && done < stop.max_replications) {
            std::int64_t batch = done < stop.min_replications ? stop.min_replications - done
                                                              : std::clamp<std::int64_t>(done / 2, 1024, 65536);
            batch = std::min(batch, stop.max_replications - done);
            run_batch(scenario, seed, done, batch, threads, lost);
            for (std::int64_t r = done; r < done + batch; ++r) {
                mom.add(lost[static_cast<std::size_t>(r)]);
                if (mom.n < stop.min_replications || mom.sum == 0) continue;
                const long double se = std::sqrt(mom.variance() / mom.n);
                const long double target = stop.relative_half_width * mom.mean();
                // The t quantile exceeds z, so failing with z means failing with t.
                if (z * se >= target) continue;
                if (t_quantile(stop.confidence, mom.n) * se < target) {
                    stopped = true;
                    break;
                }
            }
            done += batch;
        }
        lost.resize(static_cast<std::size_t>(mom.n));
    }

    LossEstimate est;
    est.confidence = stop.confidence;
    est.replications = mom.n;
    est.converged = stopped;
    est.zero_loss = mom.sum == 0;
    est.offered_bits_per_replication = scenario.offered_bits();
    est.total_lost_bits = static_cast<double>(mom.sum);
    if (offered > 0) {
        est.p_hat = static_cast<double>(mom.mean() / offered);
        est.pooled_ratio = static_cast<double>(static_cast<long double>(mom.sum) / (offered * mom.n));
        if (mom.n >= 2 && !est.zero_loss)
            est.ci_half_width =
                static_cast<double>(t_quantile(stop.confidence, mom.n) * std::sqrt(mom.variance() / mom.n) / offered);
    }
    est.zero_loss_bound = est.zero_loss ? 3.0 / static_cast<double>(mom.n) : 0.0;
    if (per_replication_lost) *per_replication_lost = std::move(lost);
    return est;
}

}  // namespace mvt

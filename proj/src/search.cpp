#include "mvtraffic/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mvtraffic/error.hpp"

namespace mvt {

StopRule SearchConfig::stop_rule() const {
    StopRule rule;
    rule.relative_half_width = relative_half_width;
    rule.confidence = confidence;
    rule.min_replications = std::max<std::int64_t>(2, sims_per_run);
    rule.max_replications = std::max(rule.min_replications, runs * sims_per_run);
    return rule;
}

void SearchConfig::check() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("search: epsilon must lie in (0, 1)");
    if (runs < 1) throw PreconditionError("search: runs must be >= 1");
    if (sims_per_run < 1) throw PreconditionError("search: sims per run must be >= 1");
    if (!(tolerance > 0.0)) throw PreconditionError("search: tolerance must be > 0");
    if (!(expansion > 1.0)) throw PreconditionError("search: expansion factor must be > 1");
    if (max_expansions < 1) throw PreconditionError("search: max expansions must be >= 1");
}

bool is_feasible(const MuxScenario& scenario, const LossEstimate& estimate, double epsilon) noexcept {
    if (scenario.trivially_lossless()) return true;
    if (estimate.p_hat > epsilon) return false;
    return !estimate.zero_loss || estimate.zero_loss_bound <= epsilon;
}

namespace {

RunSummary summarize_runs(const std::vector<std::int64_t>& lost, std::int64_t sims_per_run, std::int64_t offered) {
    RunSummary s;
    s.runs = static_cast<std::int64_t>(lost.size()) / sims_per_run;
    if (s.runs == 0 || offered == 0) return s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    long double total = 0;
    for (std::int64_t r = 0; r < s.runs; ++r) {
        __int128 sum = 0;
        for (std::int64_t k = 0; k < sims_per_run; ++k) sum += lost[static_cast<std::size_t>(r * sims_per_run + k)];
        const auto ratio = static_cast<double>(static_cast<long double>(sum) /
                                               (static_cast<long double>(sims_per_run) * static_cast<long double>(offered)));
        total += ratio;
        s.min = std::min(s.min, ratio);
        s.max = std::max(s.max, ratio);
    }
    s.mean = static_cast<double>(total / s.runs);
    return s;
}

void check_demand(const DemandSequence& demand) {
    if (demand.demand.empty()) throw PreconditionError("search: demand sequence is empty");
    if (demand.total() <= 0) throw PreconditionError("search: demand is all zero");
}

}  // namespace

CapacityResult find_cmin(const DemandSequence& demand, int streams, const SearchConfig& cfg) {
    cfg.check();
    check_demand(demand);
    if (streams < 1) throw PreconditionError("find_cmin: J must be >= 1");

    const StopRule rule = cfg.stop_rule();
    const double f = demand.frame_rate;
    std::int64_t evaluations = 0;

    struct Probe {
        bool feasible;
        LossEstimate estimate;
        std::vector<std::int64_t> lost;
    };
    auto probe = [&](std::int64_t budget) {
        ++evaluations;
        const auto scenario = MuxScenario::with_budget(demand, streams, budget);
        Probe p;
        p.estimate = estimate_loss(scenario, cfg.seed, rule, cfg.threads, &p.lost);
        p.feasible = is_feasible(scenario, p.estimate, cfg.epsilon);
        return p;
    };

    // J x peak demand can never lose a bit.
    std::int64_t hi = static_cast<std::int64_t>(streams) * demand.max();
    Probe best = probe(hi);
    for (int k = 0; !best.feasible; ++k) {
        if (k == cfg.max_expansions)
            throw Error("find_cmin: no feasible capacity after " + std::to_string(k) + " expansions");
        hi = static_cast<std::int64_t>(std::ceil(static_cast<double>(hi) * cfg.expansion));
        best = probe(hi);
    }

    // J x mean demand: the aggregate mean rate.
    const long double mean_aggregate =
        static_cast<long double>(streams) * static_cast<long double>(demand.total()) / demand.period_count();
    std::int64_t lo = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(mean_aggregate)), hi - 1);
    // Budget 0 loses every bit of a positive demand, so this terminates.
    for (int k = 0; lo > 0; ++k) {
        Probe p = probe(lo);
        if (!p.feasible) break;
        hi = lo;
        best = std::move(p);
        if (k == cfg.max_expansions) throw Error("find_cmin: lower bracket still feasible after expansions");
        lo = static_cast<std::int64_t>(std::floor(static_cast<double>(lo) / cfg.expansion));
    }

    auto width_ok = [&] {
        const auto allowed = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(cfg.tolerance * hi)));
        return hi - lo <= allowed;
    };
    while (!width_ok()) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        Probe p = probe(mid);
        if (p.feasible) {
            hi = mid;
            best = std::move(p);
        } else {
            lo = mid;
        }
    }

    CapacityResult out;
    out.budget = hi;
    out.c_min = static_cast<double>(hi) * f;
    out.feasible_rate = out.c_min;
    out.infeasible_rate = static_cast<double>(lo) * f;
    out.loss = best.estimate;
    out.run_summary = summarize_runs(best.lost, cfg.sims_per_run, best.estimate.offered_bits_per_replication);
    out.evaluations = evaluations;
    return out;
}

AdmissionResult find_jmax(const DemandSequence& demand, double link_rate, const SearchConfig& cfg) {
    cfg.check();
    check_demand(demand);
    const StopRule rule = cfg.stop_rule();

    AdmissionResult out;
    out.budget = period_budget(link_rate, demand.frame_rate);

    struct Probe {
        bool feasible;
        LossEstimate estimate;
    };
    auto probe = [&](int streams) {
        ++out.evaluations;
        const MuxScenario scenario(demand, streams, link_rate);
        Probe p{false, estimate_loss(scenario, cfg.seed, rule, cfg.threads)};
        p.feasible = is_feasible(scenario, p.estimate, cfg.epsilon);
        return p;
    };

    Probe first = probe(1);
    if (!first.feasible) {
        out.j_max = 0;
        out.loss_next = first.estimate;
        return out;
    }

    int good = 1;
    LossEstimate good_est = first.estimate;
    int bad = 2;
    Probe p = probe(bad);
    while (p.feasible) {
        if (bad > std::numeric_limits<int>::max() / 2) throw Error("find_jmax: stream count overflow");
        good = bad;
        good_est = p.estimate;
        bad *= 2;
        p = probe(bad);
    }
    LossEstimate bad_est = p.estimate;

    while (bad - good > 1) {
        const int mid = good + (bad - good) / 2;
        Probe q = probe(mid);
        if (q.feasible) {
            good = mid;
            good_est = q.estimate;
        } else {
            bad = mid;
            bad_est = q.estimate;
        }
    }
    out.j_max = good;
    out.loss = good_est;
    out.loss_next = bad_est;
    return out;
}

}  // namespace mvt

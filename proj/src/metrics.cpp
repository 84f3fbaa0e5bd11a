#include "mvtraffic/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mvtraffic/error.hpp"
#include "mvtraffic/numfmt.hpp"

namespace mvt {

namespace {

using i128 = __int128;

struct Moments {
    i128 sum = 0;
    i128 sum_sq = 0;
    std::int64_t n = 0;

    void add(std::int64_t x) {
        sum += x;
        sum_sq += static_cast<i128>(x) * x;
        ++n;
    }

    // n * sum of squared deviations from the mean; exact.
    i128 scaled_ss() const { return static_cast<i128>(n) * sum_sq - sum * sum; }

    double mean() const { return static_cast<double>(static_cast<long double>(sum) / n); }

    // Sum of squared deviations divided by `denominator`.
    double variance(long double denominator) const {
        return static_cast<double>(static_cast<long double>(scaled_ss()) / (static_cast<long double>(n) * denominator));
    }
};

StreamStats finish(const Moments& mom, long double denominator, double cov_base, double bitrate, Normalization norm) {
    StreamStats s;
    s.sample_count = mom.n;
    s.mean_frame_size = mom.mean();
    s.variance = mom.scaled_ss() == 0 ? 0.0 : mom.variance(denominator);
    s.std_dev = std::sqrt(s.variance);
    s.cov = s.variance == 0.0 ? 0.0 : s.std_dev / cov_base;
    s.mean_bitrate = bitrate;
    s.normalization = norm;
    return s;
}

}  // namespace

std::string_view to_string(Normalization n) noexcept {
    return n == Normalization::Paper ? "paper" : "standard";
}

StreamStats view_stats(const MultiviewTrace& trace, int v) {
    if (v < 1 || v > trace.num_views())
        throw PreconditionError("view_stats: view " + std::to_string(v) + " outside [1, " +
                                std::to_string(trace.num_views()) + "]");
    if (trace.num_frames() < 2) throw PreconditionError("view_stats: variance needs M >= 2");
    Moments mom;
    for (const auto& rec : trace.view(v)) mom.add(rec.size);
    const double mean = mom.mean();
    return finish(mom, mom.n - 1, mean, 8.0 * trace.meta().frame_rate * mean, Normalization::Standard);
}

MergedMean merged_mean(const MultiviewTrace& trace) {
    // The per-view average of view means equals the grand mean since every view has M frames.
    i128 total = 0;
    for (const auto& view : trace.views())
        for (const auto& rec : view) total += rec.size;
    const long double frames = static_cast<long double>(trace.num_views()) * trace.num_frames();
    MergedMean out;
    out.mean_frame_size = static_cast<double>(static_cast<long double>(total) / frames);
    out.mean_bitrate = static_cast<double>(8.0L * trace.meta().frame_rate * static_cast<long double>(total) /
                                           static_cast<long double>(trace.num_frames()));
    return out;
}

StreamStats sequential_variability(const MultiviewTrace& trace, Normalization normalization) {
    const std::int64_t m = trace.num_frames();
    const int v = trace.num_views();
    if (m < 2) throw PreconditionError("sequential_variability: needs M >= 2");
    if (normalization == Normalization::Paper && v < 2)
        throw PreconditionError("sequential_variability: paper normalization (M-1)(V-1) needs V >= 2");
    Moments mom;
    for (const auto& view : trace.views())
        for (const auto& rec : view) mom.add(rec.size);
    const long double denominator = normalization == Normalization::Paper
                                        ? static_cast<long double>(m - 1) * (v - 1)
                                        : static_cast<long double>(mom.n - 1);
    const MergedMean mean = merged_mean(trace);
    return finish(mom, denominator, mean.mean_frame_size, mean.mean_bitrate, normalization);
}

StreamStats combined_variability(const MultiviewTrace& trace) {
    if (trace.num_frames() < 2) throw PreconditionError("combined_variability: needs M >= 2");
    Moments mom;
    for (auto x : combine(trace).sizes) mom.add(x);
    // The combined mean is V times the merged mean.
    const double combined_mean = mom.mean();
    StreamStats s = finish(mom, mom.n - 1, combined_mean, merged_mean(trace).mean_bitrate, Normalization::Standard);
    return s;
}

double demand_cov(const DemandSequence& demand) {
    if (demand.period_count() < 2) throw PreconditionError("demand_cov: needs T >= 2");
    Moments mom;
    for (auto x : demand.demand) mom.add(x);
    if (mom.sum <= 0) throw PreconditionError("demand_cov: demand has zero mean");
    if (mom.scaled_ss() == 0) return 0.0;
    return std::sqrt(mom.variance(mom.n - 1)) / mom.mean();
}

double average_psnr(const MultiviewTrace& trace) {
    // Neumaier summation; the result is an arithmetic mean in dB.
    double sum = 0.0;
    double comp = 0.0;
    std::int64_t n = 0;
    for (const auto& view : trace.views()) {
        for (const auto& rec : view) {
            if (!rec.psnr)
                throw PreconditionError("average_psnr: frame (m=" + std::to_string(rec.frame_index) +
                                        ", v=" + std::to_string(rec.view) + ") has no PSNR");
            const double x = *rec.psnr;
            const double t = sum + x;
            comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
            sum = t;
            ++n;
        }
    }
    if (n == 0) throw PreconditionError("average_psnr: trace has no frames");
    return (sum + comp) / static_cast<double>(n);
}

std::string Shaping::label() const {
    switch (kind) {
        case Kind::View: return "view" + std::to_string(view);
        case Kind::Sequential: return normalization == Normalization::Paper ? "S" : "S-standard";
        case Kind::Combined: return "C";
        case Kind::Smoothed: return gop ? "smooth" + std::to_string(gop) : "smooth";
    }
    return "?";
}

Shaping parse_shaping(std::string_view text) {
    auto suffix_int = [&](std::string_view prefix) -> std::optional<int> {
        auto rest = text.substr(prefix.size());
        if (rest.empty()) return 0;
        auto n = parse_int<int>(rest);
        if (!n || *n < 1) return std::nullopt;
        return n;
    };
    if (text == "C") return Shaping::combined();
    if (text == "S") return Shaping::sequential(Normalization::Paper);
    if (text == "S-standard") return Shaping::sequential(Normalization::Standard);
    if (text.starts_with("view")) {
        if (auto v = suffix_int("view")) return Shaping::per_view(*v == 0 ? 1 : *v);
    } else if (text.starts_with("smooth")) {
        if (auto g = suffix_int("smooth")) return Shaping::smoothed(*g);
    }
    throw PreconditionError("unknown shaping '" + std::string(text) + "' (expected view[v], S, S-standard, C, smooth[G])");
}

double shaped_cov(const MultiviewTrace& trace, const Shaping& shaping) {
    switch (shaping.kind) {
        case Shaping::Kind::View: return view_stats(trace, shaping.view).cov;
        case Shaping::Kind::Sequential: return sequential_variability(trace, shaping.normalization).cov;
        case Shaping::Kind::Combined: return combined_variability(trace).cov;
        case Shaping::Kind::Smoothed: {
            const int gop = shaping.gop ? shaping.gop : trace.meta().gop_length;
            return demand_cov(gop_smooth(to_demand(combine(trace)), gop));
        }
    }
    return 0.0;
}

std::vector<CurvePoint> build_curves(std::span<const Encoding> encodings) {
    if (encodings.empty()) throw PreconditionError("build_curves: no encodings");
    std::vector<CurvePoint> rd;
    std::vector<CurvePoint> vd;
    for (const auto& enc : encodings) {
        if (!enc.trace) throw PreconditionError("build_curves: null trace");
        const MultiviewTrace& t = *enc.trace;
        const double psnr = average_psnr(t);
        std::string label = t.meta().video_name + "/" + std::string(to_string(t.meta().representation));
        if (t.meta().quantizer) label += "/qp" + std::to_string(*t.meta().quantizer);
        label += "/" + enc.shaping.label();

        rd.push_back({CurvePoint::Kind::RD, merged_mean(t).mean_bitrate, psnr, 0.0, label});
        vd.push_back({CurvePoint::Kind::VD, 0.0, psnr, shaped_cov(t, enc.shaping), label});
    }
    auto by_psnr = [](const CurvePoint& a, const CurvePoint& b) { return a.avg_psnr < b.avg_psnr; };
    std::stable_sort(rd.begin(), rd.end(), by_psnr);
    std::stable_sort(vd.begin(), vd.end(), by_psnr);
    rd.insert(rd.end(), vd.begin(), vd.end());
    return rd;
}

}  // namespace mvt

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mvtraffic/error.hpp"
#include "mvtraffic/metrics.hpp"
#include "mvtraffic/mux.hpp"
#include "mvtraffic/search.hpp"
#include "mvtraffic/streamshape.hpp"
#include "mvtraffic/trace.hpp"

namespace py = pybind11;
using namespace mvt;

namespace {

MultiviewTrace trace_from_sizes(const std::vector<std::vector<std::int64_t>>& sizes, double fps, int gop,
                                const std::string& representation, const std::string& video) {
    auto rep = parse_representation(representation);
    if (!rep) throw PreconditionError("unknown representation '" + representation + "'");
    TraceMeta meta;
    meta.video_name = video;
    meta.representation = *rep;
    meta.num_views = static_cast<int>(sizes.size());
    meta.num_frames = sizes.empty() ? 0 : static_cast<std::int64_t>(sizes.front().size());
    meta.frame_rate = fps;
    meta.gop_length = gop;
    meta.gop_pattern = GopPattern::Other;
    std::vector<std::vector<FrameRecord>> views(sizes.size());
    for (std::size_t v = 0; v < sizes.size(); ++v) {
        for (std::size_t i = 0; i < sizes[v].size(); ++i) {
            FrameRecord rec;
            rec.frame_index = static_cast<std::int64_t>(i + 1);
            rec.view = static_cast<int>(v + 1);
            rec.size = sizes[v][i];
            views[v].push_back(rec);
        }
    }
    MultiviewTrace trace(std::move(meta), std::move(views));
    require_valid(trace);
    return trace;
}

DemandSequence make_demand(std::vector<std::int64_t> bits, double fps) {
    DemandSequence d;
    d.demand = std::move(bits);
    d.frame_rate = fps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiview video traffic statistics and bufferless multiplexing";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());

    py::class_<TraceMeta>(m, "TraceMeta")
        .def_readonly("video_name", &TraceMeta::video_name)
        .def_property_readonly("representation", [](const TraceMeta& t) { return std::string(to_string(t.representation)); })
        .def_readonly("num_views", &TraceMeta::num_views)
        .def_readonly("num_frames", &TraceMeta::num_frames)
        .def_readonly("frame_rate", &TraceMeta::frame_rate)
        .def_readonly("gop_length", &TraceMeta::gop_length)
        .def_property_readonly("gop_pattern", [](const TraceMeta& t) { return std::string(to_string(t.gop_pattern)); })
        .def_readonly("quantizer", &TraceMeta::quantizer);

    py::class_<MultiviewTrace>(m, "MultiviewTrace")
        .def_property_readonly("meta", &MultiviewTrace::meta)
        .def_property_readonly("num_views", &MultiviewTrace::num_views)
        .def_property_readonly("num_frames", &MultiviewTrace::num_frames)
        .def("sizes", [](const MultiviewTrace& t, int v) {
            std::vector<std::int64_t> out;
            for (const auto& rec : t.view(v)) out.push_back(rec.size);
            return out;
        }, py::arg("view"))
        .def("psnr", [](const MultiviewTrace& t, int v) {
            std::vector<std::optional<double>> out;
            for (const auto& rec : t.view(v)) out.push_back(rec.psnr);
            return out;
        }, py::arg("view"))
        .def("frame_types", [](const MultiviewTrace& t, int v) {
            std::string out;
            for (const auto& rec : t.view(v)) out += to_char(rec.frame_type);
            return out;
        }, py::arg("view"))
        .def("__eq__", [](const MultiviewTrace& a, const MultiviewTrace& b) { return a == b; });

    m.def("parse_trace", [](const std::string& text) { return parse_trace(std::string_view(text)); }, py::arg("text"));
    m.def("load_trace", [](const std::string& path) { return load_trace(path); }, py::arg("path"));
    m.def("serialize_trace", [](const MultiviewTrace& t) { return serialize_trace(t); }, py::arg("trace"));
    m.def("validate", &validate, py::arg("trace"));
    m.def("trace_from_sizes", &trace_from_sizes, py::arg("sizes"), py::arg("fps") = 24.0, py::arg("gop") = 16,
          py::arg("representation") = "MV", py::arg("video") = "python");

    m.def("synthesize_trace", [](int views, std::int64_t frames, double fps, int gop, const std::string& pattern,
                                 double inter_view_scale, std::optional<double> psnr_db, std::uint64_t seed) {
        SynthSpec spec;
        spec.num_views = views;
        spec.representation = views == 2 ? Representation::MV : Representation::FS;
        spec.num_frames = frames;
        spec.frame_rate = fps;
        spec.gop_length = gop;
        auto p = parse_gop_pattern(pattern);
        if (!p) throw PreconditionError("unknown GoP pattern '" + pattern + "'");
        spec.gop_pattern = *p;
        spec.inter_view_scale = inter_view_scale;
        if (psnr_db) spec.psnr = PsnrModel{*psnr_db, 0.5};
        return synthesize_trace(spec, seed);
    }, py::arg("views") = 2, py::arg("frames") = 240, py::arg("fps") = 24.0, py::arg("gop") = 16,
       py::arg("pattern") = "B1", py::arg("inter_view_scale") = 0.6, py::arg("psnr_db") = py::none(),
       py::arg("seed") = 1);

    py::class_<StreamStats>(m, "StreamStats")
        .def_readonly("mean_frame_size", &StreamStats::mean_frame_size)
        .def_readonly("variance", &StreamStats::variance)
        .def_readonly("std_dev", &StreamStats::std_dev)
        .def_readonly("cov", &StreamStats::cov)
        .def_readonly("mean_bitrate", &StreamStats::mean_bitrate)
        .def_readonly("sample_count", &StreamStats::sample_count)
        .def_property_readonly("normalization", [](const StreamStats& s) { return std::string(to_string(s.normalization)); });

    auto norm_of = [](const std::string& s) {
        if (s == "paper") return Normalization::Paper;
        if (s == "standard") return Normalization::Standard;
        throw PreconditionError("normalization must be 'paper' or 'standard'");
    };

    m.def("view_stats", &view_stats, py::arg("trace"), py::arg("view"));
    m.def("merged_mean", [](const MultiviewTrace& t) {
        auto r = merged_mean(t);
        return py::make_tuple(r.mean_frame_size, r.mean_bitrate);
    }, py::arg("trace"));
    m.def("sequential_variability", [norm_of](const MultiviewTrace& t, const std::string& n) {
        return sequential_variability(t, norm_of(n));
    }, py::arg("trace"), py::arg("normalization") = "paper");
    m.def("combined_variability", &combined_variability, py::arg("trace"));
    m.def("average_psnr", &average_psnr, py::arg("trace"));
    m.def("shaped_cov", [](const MultiviewTrace& t, const std::string& shaping) {
        return shaped_cov(t, parse_shaping(shaping));
    }, py::arg("trace"), py::arg("shaping"));

    m.def("sequential_merge", [](const MultiviewTrace& t) { return sequential_merge(t).sizes; }, py::arg("trace"));
    m.def("combine", [](const MultiviewTrace& t) { return combine(t).sizes; }, py::arg("trace"));
    m.def("demand", [](const MultiviewTrace& t) { return to_demand(combine(t)).demand; }, py::arg("trace"));
    m.def("gop_smooth", [](std::vector<std::int64_t> bits, int gop, int offset) {
        return gop_smooth(make_demand(std::move(bits), 24.0), gop, offset).demand;
    }, py::arg("demand"), py::arg("gop"), py::arg("offset") = 0);
    m.def("demand_cov", [](std::vector<std::int64_t> bits) { return demand_cov(make_demand(std::move(bits), 24.0)); },
          py::arg("demand"));

    py::class_<LossEstimate>(m, "LossEstimate")
        .def_readonly("p_hat", &LossEstimate::p_hat)
        .def_readonly("ci_half_width", &LossEstimate::ci_half_width)
        .def_readonly("confidence", &LossEstimate::confidence)
        .def_readonly("replications", &LossEstimate::replications)
        .def_readonly("zero_loss", &LossEstimate::zero_loss)
        .def_readonly("converged", &LossEstimate::converged)
        .def_readonly("pooled_ratio", &LossEstimate::pooled_ratio)
        .def_readonly("zero_loss_bound", &LossEstimate::zero_loss_bound);

    m.def("simulate_replication", [](std::vector<std::int64_t> bits, int streams, std::int64_t budget,
                                     std::vector<std::int64_t> phases) {
        const auto s = MuxScenario::with_budget(make_demand(std::move(bits), 24.0), streams, budget);
        auto r = simulate_replication(s, phases);
        return py::make_tuple(r.lost_bits, r.offered_bits, r.loss_ratio);
    }, py::arg("demand"), py::arg("streams"), py::arg("budget"), py::arg("phases"));

    m.def("exact_loss_oracle", [](std::vector<std::int64_t> bits, int streams, std::int64_t budget) {
        return exact_loss_oracle(MuxScenario::with_budget(make_demand(std::move(bits), 24.0), streams, budget));
    }, py::arg("demand"), py::arg("streams"), py::arg("budget"));

    m.def("estimate_loss", [](std::vector<std::int64_t> bits, int streams, std::int64_t budget, std::uint64_t seed,
                              double target, double confidence, std::int64_t min_reps, std::int64_t max_reps,
                              unsigned threads) {
        StopRule stop{target, confidence, min_reps, max_reps};
        const auto s = MuxScenario::with_budget(make_demand(std::move(bits), 24.0), streams, budget);
        py::gil_scoped_release release;
        return estimate_loss(s, seed, stop, threads);
    }, py::arg("demand"), py::arg("streams"), py::arg("budget"), py::arg("seed") = 1, py::arg("target") = 0.10,
       py::arg("confidence") = 0.95, py::arg("min_reps") = 100, py::arg("max_reps") = 100000, py::arg("threads") = 1);

    auto make_cfg = [](double epsilon, std::int64_t runs, std::int64_t sims, std::uint64_t seed, unsigned threads) {
        SearchConfig cfg;
        cfg.epsilon = epsilon;
        cfg.runs = runs;
        cfg.sims_per_run = sims;
        cfg.seed = seed;
        cfg.threads = threads;
        return cfg;
    };

    m.def("find_cmin", [make_cfg](std::vector<std::int64_t> bits, double fps, int streams, double epsilon,
                                  std::int64_t runs, std::int64_t sims, std::uint64_t seed, unsigned threads) {
        const auto cfg = make_cfg(epsilon, runs, sims, seed, threads);
        const auto d = make_demand(std::move(bits), fps);
        py::gil_scoped_release release;
        return find_cmin(d, streams, cfg).c_min;
    }, py::arg("demand"), py::arg("fps"), py::arg("streams"), py::arg("epsilon") = 1e-5, py::arg("runs") = 500,
       py::arg("sims") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("find_jmax", [make_cfg](std::vector<std::int64_t> bits, double fps, double link_rate, double epsilon,
                                  std::int64_t runs, std::int64_t sims, std::uint64_t seed, unsigned threads) {
        const auto cfg = make_cfg(epsilon, runs, sims, seed, threads);
        const auto d = make_demand(std::move(bits), fps);
        py::gil_scoped_release release;
        return find_jmax(d, link_rate, cfg).j_max;
    }, py::arg("demand"), py::arg("fps"), py::arg("link_rate"), py::arg("epsilon") = 1e-5, py::arg("runs") = 500,
       py::arg("sims") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);
}

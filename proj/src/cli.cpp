#include "mvtraffic/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvtraffic/error.hpp"
#include "mvtraffic/metrics.hpp"
#include "mvtraffic/mux.hpp"
#include "mvtraffic/numfmt.hpp"
#include "mvtraffic/report.hpp"
#include "mvtraffic/search.hpp"
#include "mvtraffic/streamshape.hpp"
#include "mvtraffic/trace.hpp"

namespace mvt::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthesis spec files

namespace {

SizeModel size_model_from_json(const json& j, SizeModel fallback) {
    if (j.contains("median")) fallback.median = j.at("median").get<double>();
    if (j.contains("dispersion")) fallback.dispersion = j.at("dispersion").get<double>();
    return fallback;
}

json size_model_to_json(const SizeModel& m) { return {{"median", m.median}, {"dispersion", m.dispersion}}; }

template <class T, class Parse>
T enum_field(const json& doc, const char* key, T fallback, Parse parse) {
    if (!doc.contains(key)) return fallback;
    const auto text = doc.at(key).get<std::string>();
    auto value = parse(text);
    if (!value) throw PreconditionError(std::string("synth spec: invalid ") + key + " '" + text + "'");
    return *value;
}

}  // namespace

SynthSpec synth_spec_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("synth spec: ") + e.what());
    }
    if (!doc.is_object()) throw PreconditionError("synth spec: top level must be an object");
    static const std::set<std::string> known = {"video", "representation", "views", "frames", "fps", "gop",
                                                "pattern", "qp", "sizes", "inter_view_scale", "psnr"};
    for (const auto& item : doc.items())
        if (!known.contains(item.key())) throw PreconditionError("synth spec: unknown key '" + item.key() + "'");

    SynthSpec spec;
    try {
        spec.video_name = doc.value("video", spec.video_name);
        spec.representation = enum_field(doc, "representation", spec.representation, parse_representation);
        if (!doc.contains("views")) spec.num_views = spec.representation == Representation::MV ? 2 : 1;
        spec.num_views = doc.value("views", spec.num_views);
        spec.num_frames = doc.value("frames", spec.num_frames);
        spec.frame_rate = doc.value("fps", spec.frame_rate);
        spec.gop_length = doc.value("gop", spec.gop_length);
        spec.gop_pattern = enum_field(doc, "pattern", spec.gop_pattern, parse_gop_pattern);
        if (doc.contains("qp")) spec.quantizer = doc.at("qp").get<int>();
        if (doc.contains("sizes")) {
            const json& sizes = doc.at("sizes");
            if (sizes.contains("I")) spec.i_frames = size_model_from_json(sizes.at("I"), spec.i_frames);
            if (sizes.contains("P")) spec.p_frames = size_model_from_json(sizes.at("P"), spec.p_frames);
            if (sizes.contains("B")) spec.b_frames = size_model_from_json(sizes.at("B"), spec.b_frames);
        }
        spec.inter_view_scale = doc.value("inter_view_scale", spec.inter_view_scale);
        if (doc.contains("psnr")) {
            PsnrModel psnr;
            psnr.mean_db = doc.at("psnr").value("mean_db", psnr.mean_db);
            psnr.jitter_db = doc.at("psnr").value("jitter_db", psnr.jitter_db);
            spec.psnr = psnr;
        }
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("synth spec: ") + e.what());
    }
    check_synth_spec(spec);
    return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::ordered_json doc;
    doc["video"] = spec.video_name;
    doc["representation"] = std::string(to_string(spec.representation));
    doc["views"] = spec.num_views;
    doc["frames"] = spec.num_frames;
    doc["fps"] = spec.frame_rate;
    doc["gop"] = spec.gop_length;
    doc["pattern"] = std::string(to_string(spec.gop_pattern));
    if (spec.quantizer) doc["qp"] = *spec.quantizer;
    doc["sizes"] = {{"I", size_model_to_json(spec.i_frames)},
                    {"P", size_model_to_json(spec.p_frames)},
                    {"B", size_model_to_json(spec.b_frames)}};
    doc["inter_view_scale"] = spec.inter_view_scale;
    if (spec.psnr) doc["psnr"] = {{"mean_db", spec.psnr->mean_db}, {"jitter_db", spec.psnr->jitter_db}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct OutputOptions {
    std::string format = "csv";
    std::string path;
    bool human = false;

    void attach(CLI::App* app) {
        app->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));
        app->add_option("-o,--output", path, "Write the report to this file instead of stdout");
        app->add_flag("--human", human, "Render bitrates in Mb/s");
    }

    ReportFormat report_format() const { return format == "json" ? ReportFormat::Json : ReportFormat::Csv; }
};

// Bit rates are integers in bit/s, or Mb/s with --human.
std::string rate_column(const std::string& base, bool human) { return base + (human ? "_mbps" : "_bps"); }

Cell rate_cell(double bps, bool human) {
    if (human) return bps / 1e6;
    return static_cast<std::int64_t>(std::llround(bps));
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv(kSeedEnv)) {
        if (auto v = parse_int<std::uint64_t>(trim(env))) return *v;
    }
    return 1;
}

class Runner {
public:
    Runner(std::istream& in, std::ostream& out, std::ostream& err) : in_(in), out_(out), err_(err) {}

    MultiviewTrace load(const std::string& path) const {
        if (path == "-") return parse_trace(in_);
        return load_trace(path);
    }

    void emit(const ReportTable& table, const OutputOptions& opt) const {
        if (opt.path.empty()) {
            write_report(table, opt.report_format(), out_);
            return;
        }
        std::ofstream file(opt.path, std::ios::binary);
        if (!file) throw Error("cannot open output file '" + opt.path + "'");
        write_report(table, opt.report_format(), file);
    }

    std::ostream& err() const { return err_; }
    std::istream& in() const { return in_; }
    std::ostream& out() const { return out_; }

private:
    std::istream& in_;
    std::ostream& out_;
    std::ostream& err_;
};

const std::vector<std::string> kStatsColumns = {"stream", "normalization", "samples", "mean_bytes", "variance_bytes2",
                                                "std_dev_bytes", "cov"};

void add_stats_row(ReportTable& table, const std::string& stream, const StreamStats& s, bool human) {
    table.add_row({stream, std::string(to_string(s.normalization)), s.sample_count, s.mean_frame_size, s.variance,
                   s.std_dev, s.cov, rate_cell(s.mean_bitrate, human)});
}

// Demand (bits per period) expressed as per-period stream statistics in bytes.
StreamStats demand_stats(const DemandSequence& d) {
    StreamStats s;
    s.sample_count = static_cast<std::int64_t>(d.period_count());
    s.mean_frame_size = static_cast<double>(d.total()) / 8.0 / static_cast<double>(d.period_count());
    s.cov = demand_cov(d);
    s.std_dev = s.cov * s.mean_frame_size;
    s.variance = s.std_dev * s.std_dev;
    s.mean_bitrate = 8.0 * d.frame_rate * s.mean_frame_size;
    s.normalization = Normalization::Standard;
    return s;
}

DemandSequence mux_demand(const MultiviewTrace& trace, const Shaping& shaping) {
    DemandSequence d = to_demand(combine(trace));
    if (shaping.kind == Shaping::Kind::Smoothed) d = gop_smooth(d, shaping.gop ? shaping.gop : trace.meta().gop_length);
    return d;
}

std::string mux_label(const MultiviewTrace& trace, const Shaping& shaping) {
    std::string label = trace.meta().video_name + "/" + std::string(to_string(trace.meta().representation));
    if (trace.meta().quantizer) label += "/qp" + std::to_string(*trace.meta().quantizer);
    return label + "/" + shaping.label();
}

Shaping parse_mux_shaping(const std::string& text) {
    Shaping s = parse_shaping(text);
    if (s.kind != Shaping::Kind::Combined && s.kind != Shaping::Kind::Smoothed)
        throw CLI::ValidationError("--shaping", "multiplexing accepts only C or smooth[G], got '" + text + "'");
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Runner runner(in, out, err);
    CLI::App app{"Traffic statistics and statistical multiplexing of multiview (3D) video frame size traces",
                 args.empty() ? "mvtraffic" : args.front()};
    app.require_subcommand(1);
    app.fallthrough(false);

    // stats
    auto* stats = app.add_subcommand("stats", "Frame size statistics of a trace");
    std::string stats_trace;
    int stats_view = 0;
    int stats_smooth = 0;
    std::string stats_norm = "paper";
    OutputOptions stats_out;
    stats->add_option("trace", stats_trace, "Trace file ('-' for stdin)")->required();
    auto* o_view = stats->add_option("--view", stats_view, "Statistics of one view")->check(CLI::PositiveNumber);
    auto* o_seq = stats->add_flag("--sequential", "Sequentially merged stream");
    auto* o_comb = stats->add_flag("--combined", "Combined multiview frames");
    auto* o_smooth = stats->add_option("--smooth", stats_smooth, "GoP-smoothed combined demand with this G")
                         ->check(CLI::PositiveNumber);
    stats->add_option("--normalization", stats_norm, "Sequential variance denominator")
        ->check(CLI::IsMember({"paper", "standard"}));
    o_view->excludes(o_seq)->excludes(o_comb)->excludes(o_smooth);
    o_seq->excludes(o_comb)->excludes(o_smooth);
    o_comb->excludes(o_smooth);
    stats_out.attach(stats);

    // curves
    auto* curves = app.add_subcommand("curves", "RD and VD curve points over several encodings");
    std::vector<std::string> curve_traces;
    std::string curve_shaping = "C";
    OutputOptions curves_out;
    curves->add_option("traces", curve_traces, "Trace files, one per encoding")->required();
    curves->add_option("--shaping", curve_shaping, "view[v] | S | S-standard | C | smooth[G]");
    curves_out.attach(curves);

    // mux
    auto* mux = app.add_subcommand("mux", "Bufferless statistical multiplexing experiments");
    mux->require_subcommand(1);
    std::uint64_t seed = default_seed();
    SearchConfig search;
    StopRule stop;
    std::string mux_trace;
    std::string mux_shaping = "C";
    int streams = 1;
    double link_rate = 0.0;
    unsigned threads = 1;
    OutputOptions mux_out;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("trace", mux_trace, "Trace file ('-' for stdin)")->required();
        sub->add_option("--shaping", mux_shaping, "C | smooth[G]");
        sub->add_option("--seed", seed, std::string("Random seed (default from ") + kSeedEnv + " or 1)");
        sub->add_option("--threads", threads, "Worker threads for replications (0 = all cores)");
        mux_out.attach(sub);
    };
    auto add_search = [&](CLI::App* sub) {
        sub->add_option("--epsilon", search.epsilon, "Loss probability target")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--runs", search.runs, "Runs per evaluation")->check(CLI::PositiveNumber);
        sub->add_option("--sims", search.sims_per_run, "Simulations per run")->check(CLI::PositiveNumber);
        sub->add_option("--target", search.relative_half_width, "CI half-width relative to the mean");
        sub->add_option("--confidence", search.confidence, "CI confidence level");
    };

    auto* cmin = mux->add_subcommand("cmin", "Minimum link rate for J streams");
    add_common(cmin);
    add_search(cmin);
    cmin->add_option("--J", streams, "Number of streams")->required()->check(CLI::PositiveNumber);
    cmin->add_option("--tolerance", search.tolerance, "Relative bisection tolerance");

    auto* jmax = mux->add_subcommand("jmax", "Maximum number of streams for link rate C");
    add_common(jmax);
    add_search(jmax);
    jmax->add_option("--C", link_rate, "Link rate in bit/s")->required()->check(CLI::PositiveNumber);

    auto* loss = mux->add_subcommand("loss", "Loss probability of J streams on link rate C");
    add_common(loss);
    loss->add_option("--J", streams, "Number of streams")->required()->check(CLI::PositiveNumber);
    loss->add_option("--C", link_rate, "Link rate in bit/s")->required()->check(CLI::PositiveNumber);
    loss->add_option("--target", stop.relative_half_width, "CI half-width relative to the mean");
    loss->add_option("--confidence", stop.confidence, "CI confidence level");
    loss->add_option("--min-reps", stop.min_replications, "Minimum replications");
    loss->add_option("--max-reps", stop.max_replications, "Maximum replications");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic trace");
    std::string synth_spec_path;
    std::string synth_output;
    synth->add_option("--spec", synth_spec_path, "JSON synthesis spec (omit for defaults)");
    synth->add_option("--seed", seed, std::string("Random seed (default from ") + kSeedEnv + " or 1)");
    synth->add_option("-o,--output", synth_output, "Output trace file (default stdout)");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a trace against the data model");
    std::string validate_trace;
    validate_cmd->add_option("trace", validate_trace, "Trace file ('-' for stdin)")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("mvtraffic");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*stats) {
            const MultiviewTrace trace = runner.load(stats_trace);
            const Normalization norm = stats_norm == "paper" ? Normalization::Paper : Normalization::Standard;
            ReportTable table;
            table.columns = kStatsColumns;
            table.columns.push_back(rate_column("bitrate", stats_out.human));
            const bool all = !*o_view && !*o_seq && !*o_comb && !*o_smooth;
            if (*o_view) {
                add_stats_row(table, "view" + std::to_string(stats_view), view_stats(trace, stats_view), stats_out.human);
            }
            if (all) {
                for (int v = 1; v <= trace.num_views(); ++v)
                    add_stats_row(table, "view" + std::to_string(v), view_stats(trace, v), stats_out.human);
            }
            if (*o_seq || (all && (trace.num_views() >= 2 || norm == Normalization::Standard))) {
                add_stats_row(table, "S", sequential_variability(trace, norm), stats_out.human);
            }
            if (*o_comb || all) add_stats_row(table, "C", combined_variability(trace), stats_out.human);
            if (*o_smooth) {
                const auto smoothed = gop_smooth(to_demand(combine(trace)), stats_smooth);
                add_stats_row(table, "smooth" + std::to_string(stats_smooth), demand_stats(smoothed), stats_out.human);
            }
            runner.emit(table, stats_out);
            return kExitOk;
        }

        if (*curves) {
            const Shaping shaping = parse_shaping(curve_shaping);
            std::vector<MultiviewTrace> traces;
            traces.reserve(curve_traces.size());
            for (const auto& path : curve_traces) traces.push_back(runner.load(path));
            std::vector<Encoding> encodings;
            for (const auto& t : traces) encodings.push_back({&t, shaping});
            ReportTable table;
            table.columns = {"kind", "label", rate_column("avg_bitrate", curves_out.human), "avg_psnr_db", "cov"};
            for (const auto& p : build_curves(encodings)) {
                if (p.kind == CurvePoint::Kind::RD)
                    table.add_row({std::string("RD"), p.label, rate_cell(p.avg_bitrate, curves_out.human), p.avg_psnr,
                                   std::monostate{}});
                else
                    table.add_row({std::string("VD"), p.label, std::monostate{}, p.avg_psnr, p.cov});
            }
            runner.emit(table, curves_out);
            return kExitOk;
        }

        if (*mux) {
            const Shaping shaping = parse_mux_shaping(mux_shaping);
            const MultiviewTrace trace = runner.load(mux_trace);
            const DemandSequence demand = mux_demand(trace, shaping);
            const std::string label = mux_label(trace, shaping);
            const bool human = mux_out.human;
            search.seed = seed;
            search.threads = threads;

            ReportTable table;
            if (*cmin) {
                const CapacityResult r = find_cmin(demand, streams, search);
                table.columns = {"label", "J", rate_column("c_min", human), rate_column("feasible", human),
                                 rate_column("infeasible", human), "budget_bits", "p_hat", "ci_half_width",
                                 "replications", "zero_loss", "runs", "run_mean", "run_min", "run_max", "evaluations"};
                table.add_row({label, std::int64_t{streams}, rate_cell(r.c_min, human), rate_cell(r.feasible_rate, human),
                               rate_cell(r.infeasible_rate, human), r.budget, r.loss.p_hat, r.loss.ci_half_width,
                               r.loss.replications, r.loss.zero_loss, r.run_summary.runs, r.run_summary.mean,
                               r.run_summary.min, r.run_summary.max, r.evaluations});
            } else if (*jmax) {
                const AdmissionResult r = find_jmax(demand, link_rate, search);
                table.columns = {"label", rate_column("C", human), "budget_bits", "j_max", "p_hat", "ci_half_width",
                                 "replications", "p_hat_next", "evaluations"};
                table.add_row({label, rate_cell(link_rate, human), r.budget, std::int64_t{r.j_max}, r.loss.p_hat,
                               r.loss.ci_half_width, r.loss.replications, r.loss_next.p_hat, r.evaluations});
            } else {
                const MuxScenario scenario(demand, streams, link_rate);
                const LossEstimate e = estimate_loss(scenario, seed, stop, threads);
                table.columns = {"label", "J", rate_column("C", human), "budget_bits", "p_hat", "ci_half_width",
                                 "confidence", "replications", "converged", "zero_loss", "zero_loss_bound",
                                 "pooled_ratio"};
                table.add_row({label, std::int64_t{streams}, rate_cell(link_rate, human), scenario.budget(), e.p_hat,
                               e.ci_half_width, e.confidence, e.replications, e.converged, e.zero_loss,
                               e.zero_loss_bound, e.pooled_ratio});
            }
            runner.emit(table, mux_out);
            return kExitOk;
        }

        if (*synth) {
            SynthSpec spec;
            if (!synth_spec_path.empty()) {
                std::ifstream file(synth_spec_path);
                if (!file) throw Error("cannot open spec file '" + synth_spec_path + "'");
                std::stringstream buf;
                buf << file.rdbuf();
                spec = synth_spec_from_json(buf.str());
            }
            const MultiviewTrace trace = synthesize_trace(spec, seed);
            if (synth_output.empty()) {
                serialize_trace(trace, out);
            } else {
                std::ofstream file(synth_output, std::ios::binary);
                if (!file) throw Error("cannot open output file '" + synth_output + "'");
                serialize_trace(trace, file);
            }
            return kExitOk;
        }

        if (*validate_cmd) {
            const MultiviewTrace trace = runner.load(validate_trace);
            out << "ok: " << trace.meta().video_name << " (" << to_string(trace.meta().representation) << ", V="
                << trace.num_views() << ", M=" << trace.num_frames() << ")\n";
            return kExitOk;
        }
    } catch (const ValidationError& e) {
        err << "validation failed:\n";
        for (const auto& v : e.violations()) err << "  " << v << "\n";
        return kExitValidation;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

}  // namespace mvt::cli

#include "mvtraffic/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mvtraffic/error.hpp"
#include "mvtraffic/numfmt.hpp"
#include "mvtraffic/rng.hpp"

namespace mvt {

std::string_view to_string(Representation r) noexcept {
    switch (r) {
        case Representation::MV: return "MV";
        case Representation::FS: return "FS";
        case Representation::SBS: return "SBS";
    }
    return "?";
}

std::string_view to_string(GopPattern p) noexcept {
    switch (p) {
        case GopPattern::B1: return "B1";
        case GopPattern::B7: return "B7";
        case GopPattern::Other: return "other";
    }
    return "?";
}

char to_char(FrameType t) noexcept {
    switch (t) {
        case FrameType::I: return 'I';
        case FrameType::P: return 'P';
        case FrameType::B: return 'B';
        case FrameType::Unknown: return 'U';
    }
    return 'U';
}

std::optional<Representation> parse_representation(std::string_view s) noexcept {
    if (s == "MV") return Representation::MV;
    if (s == "FS") return Representation::FS;
    if (s == "SBS") return Representation::SBS;
    return std::nullopt;
}

std::optional<GopPattern> parse_gop_pattern(std::string_view s) noexcept {
    if (s == "B1") return GopPattern::B1;
    if (s == "B7") return GopPattern::B7;
    if (s == "other") return GopPattern::Other;
    return std::nullopt;
}

std::optional<FrameType> parse_frame_type(std::string_view s) noexcept {
    if (s == "I") return FrameType::I;
    if (s == "P") return FrameType::P;
    if (s == "B") return FrameType::B;
    if (s == "U") return FrameType::Unknown;
    return std::nullopt;
}

bool MultiviewTrace::has_psnr() const noexcept {
    if (views_.empty()) return false;
    for (const auto& view : views_)
        for (const auto& rec : view)
            if (!rec.psnr) return false;
    return true;
}

std::vector<std::string> validate(const MultiviewTrace& trace) {
    std::vector<std::string> out;
    const TraceMeta& meta = trace.meta();

    if (meta.num_views < 1) out.push_back("views: must be >= 1, got " + std::to_string(meta.num_views));
    if (meta.num_frames < 1) out.push_back("frames: must be >= 1, got " + std::to_string(meta.num_frames));
    if (!(meta.frame_rate > 0.0) || !std::isfinite(meta.frame_rate))
        out.push_back("fps: must be finite and > 0, got " + format_double(meta.frame_rate));
    if (meta.gop_length < 1) out.push_back("gop: must be >= 1, got " + std::to_string(meta.gop_length));
    if (meta.representation == Representation::MV && meta.num_views != 2)
        out.push_back("views: representation MV requires 2 views, got " + std::to_string(meta.num_views));
    if (meta.representation != Representation::MV && meta.num_views != 1)
        out.push_back("views: representation " + std::string(to_string(meta.representation)) +
                      " requires 1 view, got " + std::to_string(meta.num_views));

    const auto& views = trace.views();
    if (static_cast<int>(views.size()) != meta.num_views)
        out.push_back("views: header declares " + std::to_string(meta.num_views) + " views, trace holds " +
                      std::to_string(views.size()));
    if (views.empty()) return out;

    const bool equal_lengths = std::all_of(views.begin(), views.end(),
                                           [&](const auto& v) { return v.size() == views.front().size(); });
    if (!equal_lengths) {
        std::string msg = "frames: inconsistent frame counts across views (";
        for (std::size_t v = 0; v < views.size(); ++v) {
            if (v) msg += ", ";
            msg += "view " + std::to_string(v + 1) + ": " + std::to_string(views[v].size());
        }
        out.push_back(msg + ")");
    } else if (static_cast<std::int64_t>(views.front().size()) != meta.num_frames) {
        out.push_back("frames: header declares " + std::to_string(meta.num_frames) + " frames per view, views hold " +
                      std::to_string(views.front().size()));
    }

    for (std::size_t v = 0; v < views.size(); ++v) {
        for (std::size_t i = 0; i < views[v].size(); ++i) {
            const FrameRecord& rec = views[v][i];
            const std::string where = "(m=" + std::to_string(i + 1) + ", v=" + std::to_string(v + 1) + ")";
            if (rec.frame_index != static_cast<std::int64_t>(i + 1))
                out.push_back("frame_index at " + where + ": expected " + std::to_string(i + 1) + ", got " +
                              std::to_string(rec.frame_index));
            if (rec.view != static_cast<int>(v + 1))
                out.push_back("view at " + where + ": record carries view " + std::to_string(rec.view));
            if (rec.size < 0) out.push_back("size at " + where + ": must be >= 0, got " + std::to_string(rec.size));
            if (rec.psnr && !(std::isfinite(*rec.psnr) && *rec.psnr > 0.0))
                out.push_back("psnr at " + where + ": must be finite and > 0, got " + format_double(*rec.psnr));
        }
    }
    return out;
}

void require_valid(const MultiviewTrace& trace) {
    auto violations = validate(trace);
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct PendingRecord {
    FrameRecord rec;
    std::size_t line;
};

template <class T>
T require_field(const std::optional<T>& value, const char* key) {
    if (!value) throw ParseError(0, std::string("missing mandatory header field '") + key + "'");
    return *value;
}

}  // namespace

MultiviewTrace parse_trace(std::istream& in, const TraceMetaOverrides& overrides) {
    TraceMetaOverrides header;
    std::vector<PendingRecord> rows;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.starts_with("#!")) {
            const std::string_view kv = line.substr(2);
            const std::size_t eq = kv.find('=');
            if (eq == std::string_view::npos) throw ParseError(line_no, "header line without '='");
            const std::string_view key = trim(kv.substr(0, eq));
            const std::string_view value = trim(kv.substr(eq + 1));
            auto bad = [&] { return ParseError(line_no, "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'"); };
            if (key == "video") {
                header.video_name = std::string(value);
            } else if (key == "representation") {
                if (!(header.representation = parse_representation(value))) throw bad();
            } else if (key == "views") {
                if (!(header.num_views = parse_int<int>(value))) throw bad();
            } else if (key == "frames") {
                if (!(header.num_frames = parse_int<std::int64_t>(value))) throw bad();
            } else if (key == "fps") {
                if (!(header.frame_rate = parse_double(value))) throw bad();
            } else if (key == "gop") {
                if (!(header.gop_length = parse_int<int>(value))) throw bad();
            } else if (key == "pattern") {
                if (!(header.gop_pattern = parse_gop_pattern(value))) throw bad();
            } else if (key == "qp") {
                if (!(header.quantizer = parse_int<int>(value))) throw bad();
            } else {
                throw ParseError(line_no, "unknown header key '" + std::string(key) + "'");
            }
            continue;
        }
        if (line.front() == '#') continue;

        const auto fields = split(line, ',');
        if (fields.size() != 4 && fields.size() != 5)
            throw ParseError(line_no, "expected 4 or 5 comma-separated fields, got " + std::to_string(fields.size()));
        PendingRecord row{{}, line_no};
        auto m = parse_int<std::int64_t>(fields[0]);
        auto v = parse_int<int>(fields[1]);
        auto type = parse_frame_type(fields[2]);
        auto size = parse_int<std::int64_t>(fields[3]);
        if (!m || *m < 1) throw ParseError(line_no, "invalid frame_index '" + std::string(fields[0]) + "'");
        if (!v || *v < 1) throw ParseError(line_no, "invalid view '" + std::string(fields[1]) + "'");
        if (!type) throw ParseError(line_no, "invalid frame_type '" + std::string(fields[2]) + "'");
        if (!size) throw ParseError(line_no, "invalid size_bytes '" + std::string(fields[3]) + "'");
        if (*size < 0) throw ParseError(line_no, "negative size " + std::to_string(*size));
        row.rec.frame_index = *m;
        row.rec.view = *v;
        row.rec.frame_type = *type;
        row.rec.size = *size;
        if (fields.size() == 5) {
            auto psnr = parse_double(fields[4]);
            if (!psnr || !std::isfinite(*psnr) || *psnr <= 0.0)
                throw ParseError(line_no, "invalid psnr_db '" + std::string(fields[4]) + "'");
            row.rec.psnr = *psnr;
        }
        rows.push_back(row);
    }
    if (in.bad()) throw Error("I/O error while reading trace");

    TraceMeta meta;
    meta.video_name = require_field(overrides.video_name ? overrides.video_name : header.video_name, "video");
    meta.representation =
        require_field(overrides.representation ? overrides.representation : header.representation, "representation");
    meta.num_views = require_field(overrides.num_views ? overrides.num_views : header.num_views, "views");
    meta.num_frames = require_field(overrides.num_frames ? overrides.num_frames : header.num_frames, "frames");
    meta.frame_rate = require_field(overrides.frame_rate ? overrides.frame_rate : header.frame_rate, "fps");
    meta.gop_length = require_field(overrides.gop_length ? overrides.gop_length : header.gop_length, "gop");
    meta.gop_pattern = require_field(overrides.gop_pattern ? overrides.gop_pattern : header.gop_pattern, "pattern");
    meta.quantizer = overrides.quantizer ? overrides.quantizer : header.quantizer;
    if (meta.num_views < 1) throw ParseError(0, "views must be >= 1");
    if (meta.num_frames < 1) throw ParseError(0, "frames must be >= 1");

    std::vector<std::map<std::int64_t, PendingRecord>> per_view(static_cast<std::size_t>(meta.num_views));
    for (const auto& row : rows) {
        if (row.rec.view > meta.num_views)
            throw ParseError(row.line, "view " + std::to_string(row.rec.view) + " exceeds declared views " +
                                           std::to_string(meta.num_views));
        if (row.rec.frame_index > meta.num_frames)
            throw ParseError(row.line, "frame_index " + std::to_string(row.rec.frame_index) +
                                           " exceeds declared frames " + std::to_string(meta.num_frames));
        auto& slot = per_view[static_cast<std::size_t>(row.rec.view - 1)];
        auto [it, inserted] = slot.emplace(row.rec.frame_index, row);
        if (!inserted)
            throw ParseError(row.line, "duplicate (m=" + std::to_string(row.rec.frame_index) +
                                           ", v=" + std::to_string(row.rec.view) + "), first seen on line " +
                                           std::to_string(it->second.line));
    }

    std::vector<std::vector<FrameRecord>> views(per_view.size());
    for (std::size_t v = 0; v < per_view.size(); ++v) {
        views[v].reserve(per_view[v].size());
        for (auto& [m, row] : per_view[v]) views[v].push_back(row.rec);
    }
    // Indices are unique and within [1, M], so a full count means no gaps.
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].size() != views.front().size()) {
            std::string msg = "inconsistent frame counts across views (";
            for (std::size_t k = 0; k < views.size(); ++k) {
                if (k) msg += ", ";
                msg += "view " + std::to_string(k + 1) + ": " + std::to_string(views[k].size());
            }
            throw ValidationError({msg + ")"});
        }
    }
    if (static_cast<std::int64_t>(views.front().size()) != meta.num_frames) {
        for (std::size_t i = 0; i < views.front().size(); ++i) {
            if (views.front()[i].frame_index != static_cast<std::int64_t>(i + 1))
                throw ValidationError({"frames: missing frame_index " + std::to_string(i + 1)});
        }
        throw ValidationError({"frames: header declares " + std::to_string(meta.num_frames) +
                               " frames per view, file holds " + std::to_string(views.front().size())});
    }

    MultiviewTrace trace(std::move(meta), std::move(views));
    require_valid(trace);
    return trace;
}

MultiviewTrace parse_trace(std::string_view text, const TraceMetaOverrides& overrides) {
    std::istringstream in{std::string(text)};
    return parse_trace(in, overrides);
}

MultiviewTrace load_trace(const std::string& path, const TraceMetaOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    return parse_trace(in, overrides);
}

void serialize_trace(const MultiviewTrace& trace, std::ostream& out) {
    const TraceMeta& meta = trace.meta();
    out << "#!video=" << meta.video_name << '\n'
        << "#!representation=" << to_string(meta.representation) << '\n'
        << "#!views=" << meta.num_views << '\n'
        << "#!frames=" << meta.num_frames << '\n'
        << "#!fps=" << format_double(meta.frame_rate) << '\n'
        << "#!gop=" << meta.gop_length << '\n'
        << "#!pattern=" << to_string(meta.gop_pattern) << '\n';
    if (meta.quantizer) out << "#!qp=" << *meta.quantizer << '\n';

    const auto& views = trace.views();
    const std::size_t frames = views.empty() ? 0 : views.front().size();
    for (std::size_t i = 0; i < frames; ++i) {
        for (const auto& view : views) {
            const FrameRecord& rec = view[i];
            out << rec.frame_index << ',' << rec.view << ',' << to_char(rec.frame_type) << ',' << rec.size;
            if (rec.psnr) out << ',' << format_double(*rec.psnr);
            out << '\n';
        }
    }
}

std::string serialize_trace(const MultiviewTrace& trace) {
    std::ostringstream out;
    serialize_trace(trace, out);
    return out.str();
}

void check_synth_spec(const SynthSpec& spec) {
    auto fail = [](const std::string& msg) { throw PreconditionError("invalid synth spec: " + msg); };
    if (spec.num_views < 1) fail("views must be >= 1");
    if (spec.representation == Representation::MV && spec.num_views != 2) fail("representation MV requires 2 views");
    if (spec.representation != Representation::MV && spec.num_views != 1) fail("representation FS/SBS requires 1 view");
    if (spec.num_frames < 1) fail("frames must be >= 1");
    if (!(spec.frame_rate > 0.0) || !std::isfinite(spec.frame_rate)) fail("fps must be finite and > 0");
    if (spec.gop_length < 1) fail("gop must be >= 1");
    for (const auto* model : {&spec.i_frames, &spec.p_frames, &spec.b_frames}) {
        if (!(model->median > 0.0) || !std::isfinite(model->median)) fail("size median must be finite and > 0");
        if (!(model->dispersion >= 0.0) || !std::isfinite(model->dispersion)) fail("size dispersion must be >= 0");
    }
    if (!(spec.inter_view_scale > 0.0 && spec.inter_view_scale <= 1.0)) fail("inter-view scale must lie in (0, 1]");
    if (spec.psnr) {
        if (!(spec.psnr->mean_db > 0.0) || !std::isfinite(spec.psnr->mean_db)) fail("psnr mean must be > 0");
        if (!(spec.psnr->jitter_db >= 0.0) || !std::isfinite(spec.psnr->jitter_db)) fail("psnr jitter must be >= 0");
    }
}

FrameType gop_frame_type(GopPattern pattern, int gop_length, std::int64_t m) noexcept {
    const std::int64_t k = (m - 1) % gop_length;
    if (k == 0) return FrameType::I;
    switch (pattern) {
        case GopPattern::B1: return k % 2 == 1 ? FrameType::B : FrameType::P;
        case GopPattern::B7: return k % 8 == 0 ? FrameType::P : FrameType::B;
        case GopPattern::Other: return FrameType::P;
    }
    return FrameType::Unknown;
}

MultiviewTrace synthesize_trace(const SynthSpec& spec, std::uint64_t seed) {
    check_synth_spec(spec);

    TraceMeta meta;
    meta.video_name = spec.video_name;
    meta.representation = spec.representation;
    meta.num_views = spec.num_views;
    meta.num_frames = spec.num_frames;
    meta.frame_rate = spec.frame_rate;
    meta.gop_length = spec.gop_length;
    meta.gop_pattern = spec.gop_pattern;
    meta.quantizer = spec.quantizer;

    std::vector<std::vector<FrameRecord>> views(static_cast<std::size_t>(spec.num_views));
    for (int v = 1; v <= spec.num_views; ++v) {
        // One independent stream per view keeps view 1 unchanged when V changes.
        rng::SplitMix64 gen(rng::derive(seed, static_cast<std::uint64_t>(v)));
        const double scale = v == 1 ? 1.0 : spec.inter_view_scale;
        auto& view = views[static_cast<std::size_t>(v - 1)];
        view.reserve(static_cast<std::size_t>(spec.num_frames));
        for (std::int64_t m = 1; m <= spec.num_frames; ++m) {
            const FrameType type = gop_frame_type(spec.gop_pattern, spec.gop_length, m);
            const SizeModel& model =
                type == FrameType::I ? spec.i_frames : type == FrameType::P ? spec.p_frames : spec.b_frames;
            const double z = rng::standard_normal(gen);
            const double bytes = model.median * std::exp(model.dispersion * z) * scale;

            FrameRecord rec;
            rec.frame_index = m;
            rec.view = v;
            rec.frame_type = type;
            rec.size = std::llround(bytes);
            if (spec.psnr) {
                const double zq = rng::standard_normal(gen);
                rec.psnr = std::max(1.0, spec.psnr->mean_db + spec.psnr->jitter_db * zq);
            }
            view.push_back(rec);
        }
    }
    return MultiviewTrace(std::move(meta), std::move(views));
}

}  // namespace mvt

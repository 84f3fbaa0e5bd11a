#pragma once

// Trace data model and the canonical text format.
//
// A trace holds, for one encoding of one video, the encoded size of every
// frame of every view. Frame and view indices are 1-based throughout the
// public interface. Sizes are bytes; conversion to bits happens once, when a
// demand sequence is built (see streamshape.hpp).
//
// Canonical file layout:
//
//   #!video=<name>
//   #!representation=MV|FS|SBS
//   #!views=<V>
//   #!frames=<M>
//   #!fps=<f>
//   #!gop=<G>
//   #!pattern=B1|B7|other
//   #!qp=<int>                       (optional)
//   frame_index,view,frame_type,size_bytes[,psnr_db]
//
// Blank lines and lines starting with '#' (but not '#!') are ignored.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvt {

enum class Representation { MV, FS, SBS };
enum class GopPattern { B1, B7, Other };
enum class FrameType { I, P, B, Unknown };

std::string_view to_string(Representation r) noexcept;
std::string_view to_string(GopPattern p) noexcept;
char to_char(FrameType t) noexcept;

std::optional<Representation> parse_representation(std::string_view s) noexcept;
std::optional<GopPattern> parse_gop_pattern(std::string_view s) noexcept;
std::optional<FrameType> parse_frame_type(std::string_view s) noexcept;

struct TraceMeta {
    std::string video_name;
    Representation representation = Representation::MV;
    int num_views = 2;
    std::int64_t num_frames = 0;
    double frame_rate = 24.0;
    int gop_length = 16;
    GopPattern gop_pattern = GopPattern::B1;
    std::optional<int> quantizer;

    bool operator==(const TraceMeta&) const = default;
};

// Header fields supplied from outside the file; set fields win over the file.
struct TraceMetaOverrides {
    std::optional<std::string> video_name;
    std::optional<Representation> representation;
    std::optional<int> num_views;
    std::optional<std::int64_t> num_frames;
    std::optional<double> frame_rate;
    std::optional<int> gop_length;
    std::optional<GopPattern> gop_pattern;
    std::optional<int> quantizer;
};

struct FrameRecord {
    std::int64_t frame_index = 1;
    int view = 1;
    FrameType frame_type = FrameType::Unknown;
    std::int64_t size = 0;  // bytes
    std::optional<double> psnr;

    bool operator==(const FrameRecord&) const = default;
};

// views[v-1][m-1] is the record of frame m of view v.
class MultiviewTrace {
public:
    MultiviewTrace() = default;
    MultiviewTrace(TraceMeta meta, std::vector<std::vector<FrameRecord>> views)
        : meta_(std::move(meta)), views_(std::move(views)) {}

    const TraceMeta& meta() const noexcept { return meta_; }
    const std::vector<std::vector<FrameRecord>>& views() const noexcept { return views_; }
    const std::vector<FrameRecord>& view(int v) const { return views_.at(static_cast<std::size_t>(v - 1)); }

    int num_views() const noexcept { return meta_.num_views; }
    std::int64_t num_frames() const noexcept { return meta_.num_frames; }

    // X_m(v) in bytes.
    std::int64_t size(std::int64_t m, int v) const {
        return view(v).at(static_cast<std::size_t>(m - 1)).size;
    }

    bool has_psnr() const noexcept;

    // Mutable access, for building and for tests that inject faults.
    TraceMeta& mutable_meta() noexcept { return meta_; }
    std::vector<std::vector<FrameRecord>>& mutable_views() noexcept { return views_; }

    bool operator==(const MultiviewTrace&) const = default;

private:
    TraceMeta meta_;
    std::vector<std::vector<FrameRecord>> views_;
};

// Empty iff every invariant holds. Each entry names the field, the location
// and the broken rule.
std::vector<std::string> validate(const MultiviewTrace& trace);

// Throws ValidationError when validate() is non-empty.
void require_valid(const MultiviewTrace& trace);

// Throws ParseError (malformed rows, missing header fields) or
// ValidationError (inconsistent counts, duplicates).
MultiviewTrace parse_trace(std::istream& in, const TraceMetaOverrides& overrides = {});
MultiviewTrace parse_trace(std::string_view text, const TraceMetaOverrides& overrides = {});
MultiviewTrace load_trace(const std::string& path, const TraceMetaOverrides& overrides = {});

void serialize_trace(const MultiviewTrace& trace, std::ostream& out);
std::string serialize_trace(const MultiviewTrace& trace);

// Log-normal frame size model per frame type: size = median * exp(dispersion * Z).
struct SizeModel {
    double median = 1.0;      // bytes, > 0
    double dispersion = 0.0;  // log-scale standard deviation, >= 0

    bool operator==(const SizeModel&) const = default;
};

struct PsnrModel {
    double mean_db = 38.0;
    double jitter_db = 0.0;  // standard deviation of per-frame PSNR

    bool operator==(const PsnrModel&) const = default;
};

struct SynthSpec {
    std::string video_name = "synthetic";
    Representation representation = Representation::MV;
    int num_views = 2;
    std::int64_t num_frames = 240;
    double frame_rate = 24.0;
    int gop_length = 16;
    GopPattern gop_pattern = GopPattern::B1;
    std::optional<int> quantizer;
    SizeModel i_frames{20000.0, 0.2};
    SizeModel p_frames{8000.0, 0.4};
    SizeModel b_frames{3000.0, 0.5};
    double inter_view_scale = 0.6;  // applied to every view after the first, in (0, 1]
    std::optional<PsnrModel> psnr;

    bool operator==(const SynthSpec&) const = default;
};

// Throws PreconditionError describing the first invalid field.
void check_synth_spec(const SynthSpec& spec);

// Frame type of 1-based frame m under the GoP structure.
FrameType gop_frame_type(GopPattern pattern, int gop_length, std::int64_t m) noexcept;

// Pure function of (spec, seed).
MultiviewTrace synthesize_trace(const SynthSpec& spec, std::uint64_t seed);

}  // namespace mvt

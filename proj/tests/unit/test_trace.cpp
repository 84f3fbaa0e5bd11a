#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "mvtraffic/error.hpp"
#include "mvtraffic/metrics.hpp"
#include "mvtraffic/trace.hpp"

using namespace mvt;

namespace {

const char* kHeader =
    "#!video=clip\n"
    "#!representation=MV\n"
    "#!views=2\n"
    "#!frames=3\n"
    "#!fps=24\n"
    "#!gop=16\n"
    "#!pattern=B1\n";

std::string with_header(const std::string& rows) { return std::string(kHeader) + rows; }

SynthSpec small_spec() {
    SynthSpec spec;
    spec.num_frames = 48;
    spec.gop_length = 8;
    return spec;
}

}  // namespace

TEST(ParseTrace, WellFormedTwoViews) {
    const auto t = parse_trace(with_header("1,1,I,100\n1,2,I,60\n2,1,B,20\n2,2,B,10\n3,1,P,40\n3,2,P,30\n"));
    EXPECT_EQ(t.num_frames(), 3);
    EXPECT_EQ(t.num_views(), 2);
    EXPECT_EQ(t.meta().video_name, "clip");
    EXPECT_EQ(t.size(3, 2), 30);
    EXPECT_EQ(t.view(1)[1].frame_type, FrameType::B);
    EXPECT_FALSE(t.has_psnr());
    EXPECT_TRUE(validate(t).empty());
}

TEST(ParseTrace, InconsistentFrameCounts) {
    try {
        parse_trace(with_header("1,1,I,100\n1,2,I,60\n2,1,B,20\n2,2,B,10\n3,1,P,40\n"));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("inconsistent frame counts"), std::string::npos) << e.what();
    }
}

TEST(ParseTrace, NegativeSizeNamesLine) {
    try {
        parse_trace(with_header("1,1,I,100\n1,2,I,-100\n"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 9u);
        EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos) << e.what();
    }
}

TEST(ParseTrace, MalformedRowsReportLine) {
    EXPECT_THROW(parse_trace(with_header("1,1,I\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("1,1,X,5\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("1,1,I,5.5\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("1,1,I,5,-3\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("0,1,I,5\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("4,1,I,5\n")), ParseError);
    EXPECT_THROW(parse_trace(with_header("1,3,I,5\n")), ParseError);
    EXPECT_THROW(parse_trace(std::string(kHeader) + "#!colour=blue\n"), ParseError);
}

TEST(ParseTrace, DuplicateFrameView) {
    try {
        parse_trace(with_header("1,1,I,1\n1,1,I,2\n"));
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 9u);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(ParseTrace, MissingHeaderFieldUnlessOverridden) {
    const std::string text = "#!video=x\n#!representation=FS\n#!views=1\n#!frames=2\n#!gop=2\n#!pattern=other\n"
                             "1,1,I,5\n2,1,P,6\n";
    EXPECT_THROW(parse_trace(text), ParseError);
    TraceMetaOverrides o;
    o.frame_rate = 30.0;
    const auto t = parse_trace(text, o);
    EXPECT_EQ(t.meta().frame_rate, 30.0);
}

TEST(ParseTrace, OverridesWinOverHeader) {
    TraceMetaOverrides o;
    o.frame_rate = 25.0;
    o.video_name = "renamed";
    o.quantizer = 28;
    const auto t = parse_trace(with_header("1,1,I,1\n1,2,I,1\n2,1,B,1\n2,2,B,1\n3,1,P,1\n3,2,P,1\n"), o);
    EXPECT_EQ(t.meta().frame_rate, 25.0);
    EXPECT_EQ(t.meta().video_name, "renamed");
    EXPECT_EQ(t.meta().quantizer, 28);
}

TEST(ParseTrace, SortsRowsAndSkipsCommentsAndBlanks) {
    const auto t = parse_trace(with_header("# a comment\n\n3,2,P,30\n1,1,I,100\n  \n2,2,B,10\n1,2,I,60\n"
                                           "3,1,P,40\r\n2,1,B,20\n"));
    EXPECT_EQ(t.size(1, 1), 100);
    EXPECT_EQ(t.size(2, 1), 20);
    EXPECT_EQ(t.size(3, 2), 30);
}

TEST(ParseTrace, MissingFramesAreRejected) {
    // Both views hold frames 1 and 3 only; header says 3.
    EXPECT_THROW(parse_trace(with_header("1,1,I,1\n1,2,I,1\n3,1,P,1\n3,2,P,1\n")), ValidationError);
}

TEST(ParseTrace, RepresentationViewCountRule) {
    const std::string text = "#!video=x\n#!representation=SBS\n#!views=2\n#!frames=1\n#!fps=24\n#!gop=1\n#!pattern=other\n"
                             "1,1,I,5\n1,2,I,6\n";
    EXPECT_THROW(parse_trace(text), ValidationError);
}

TEST(SerializeTrace, OmitsPsnrColumnWhenAbsent) {
    const auto t = parse_trace(with_header("1,1,I,100\n1,2,I,60\n2,1,B,20\n2,2,B,10\n3,1,P,40\n3,2,P,30\n"));
    const std::string text = serialize_trace(t);
    EXPECT_NE(text.find("\n1,1,I,100\n"), std::string::npos);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with("#")) continue;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
    }
}

TEST(SerializeTrace, SingleViewHeader) {
    SynthSpec spec = small_spec();
    spec.representation = Representation::FS;
    spec.num_views = 1;
    const auto t = synthesize_trace(spec, 3);
    const std::string text = serialize_trace(t);
    EXPECT_NE(text.find("#!views=1\n"), std::string::npos);
    EXPECT_EQ(text.find(",2,"), std::string::npos);
    EXPECT_EQ(parse_trace(text), t);
}

TEST(SerializeTrace, RoundTripIsIdentityOnSynthesizedTraces) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        SynthSpec spec = small_spec();
        spec.num_frames = 1 + static_cast<std::int64_t>(seed * 7 % 61);
        spec.gop_length = 1 + static_cast<int>(seed % 12);
        spec.gop_pattern = seed % 3 == 0 ? GopPattern::B1 : seed % 3 == 1 ? GopPattern::B7 : GopPattern::Other;
        spec.frame_rate = seed % 2 ? 24.0 : 29.97;
        if (seed % 4 == 0) {
            spec.representation = Representation::SBS;
            spec.num_views = 1;
        }
        if (seed % 2 == 0) spec.psnr = PsnrModel{37.3, 1.7};
        if (seed % 5 == 0) spec.quantizer = 20 + static_cast<int>(seed);
        const auto t = synthesize_trace(spec, seed);
        ASSERT_TRUE(validate(t).empty());
        const auto back = parse_trace(serialize_trace(t));
        EXPECT_EQ(back, t) << "seed " << seed;
    }
}

TEST(Validate, ReportsEachViolation) {
    auto t = synthesize_trace(small_spec(), 1);
    EXPECT_TRUE(validate(t).empty());

    auto bad_size = t;
    bad_size.mutable_views()[1][4].size = -1;
    auto v = validate(bad_size);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("(m=5, v=2)"), std::string::npos) << v[0];

    auto short_view = t;
    short_view.mutable_views()[1].pop_back();
    v = validate(short_view);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("view 1: 48"), std::string::npos) << v[0];
    EXPECT_NE(v[0].find("view 2: 47"), std::string::npos) << v[0];

    auto bad_psnr = t;
    bad_psnr.mutable_views()[0][0].psnr = -2.0;
    EXPECT_EQ(validate(bad_psnr).size(), 1u);

    auto bad_meta = t;
    bad_meta.mutable_meta().frame_rate = 0.0;
    bad_meta.mutable_meta().gop_length = 0;
    EXPECT_EQ(validate(bad_meta).size(), 2u);
}

TEST(Synthesize, DeterministicForSameSeed) {
    const auto spec = small_spec();
    EXPECT_EQ(serialize_trace(synthesize_trace(spec, 42)), serialize_trace(synthesize_trace(spec, 42)));
    EXPECT_NE(serialize_trace(synthesize_trace(spec, 42)), serialize_trace(synthesize_trace(spec, 43)));
}

TEST(Synthesize, ZeroDispersionGivesEqualSizesPerType) {
    SynthSpec spec = small_spec();
    spec.i_frames = {10000, 0};
    spec.p_frames = {4000, 0};
    spec.b_frames = {1000, 0};
    const auto t = synthesize_trace(spec, 9);
    std::set<std::int64_t> i, p, b;
    for (const auto& rec : t.view(1)) {
        (rec.frame_type == FrameType::I ? i : rec.frame_type == FrameType::P ? p : b).insert(rec.size);
    }
    EXPECT_EQ(i, std::set<std::int64_t>{10000});
    EXPECT_EQ(p, std::set<std::int64_t>{4000});
    EXPECT_EQ(b, std::set<std::int64_t>{1000});
}

TEST(Synthesize, ZeroDispersionEqualMediansGiveZeroCov) {
    SynthSpec spec = small_spec();
    spec.i_frames = spec.p_frames = spec.b_frames = {500, 0};
    const auto t = synthesize_trace(spec, 1);
    for (int v = 1; v <= 2; ++v) EXPECT_EQ(view_stats(t, v).cov, 0.0);
}

TEST(Synthesize, InterViewScaleHalvesSecondView) {
    SynthSpec spec = small_spec();
    spec.i_frames = {10000, 0};
    spec.p_frames = {4000, 0};
    spec.b_frames = {1000, 0};
    spec.inter_view_scale = 0.5;
    const auto t = synthesize_trace(spec, 5);
    for (std::int64_t m = 1; m <= t.num_frames(); ++m) EXPECT_EQ(2 * t.size(m, 2), t.size(m, 1)) << m;
}

TEST(Synthesize, GopPatternB1) {
    SynthSpec spec = small_spec();
    spec.gop_pattern = GopPattern::B1;
    spec.gop_length = 6;
    const auto t = synthesize_trace(spec, 0);
    std::string types;
    for (const auto& rec : t.view(1)) types += to_char(rec.frame_type);
    EXPECT_EQ(types.substr(0, 12), "IBPBPBIBPBPB");
    for (std::int64_t m = 1; m <= t.num_frames(); m += spec.gop_length)
        EXPECT_EQ(t.view(1)[static_cast<std::size_t>(m - 1)].frame_type, FrameType::I);
}

TEST(Synthesize, GopPatternB7) {
    std::string types;
    for (std::int64_t m = 1; m <= 24; ++m) types += to_char(gop_frame_type(GopPattern::B7, 16, m));
    EXPECT_EQ(types, "IBBBBBBBPBBBBBBBIBBBBBBB");
}

TEST(Synthesize, RejectsInvalidSpec) {
    SynthSpec spec = small_spec();
    spec.inter_view_scale = 0.0;
    EXPECT_THROW(synthesize_trace(spec, 1), PreconditionError);
    spec = small_spec();
    spec.p_frames.median = -3;
    EXPECT_THROW(synthesize_trace(spec, 1), PreconditionError);
    spec = small_spec();
    spec.num_views = 3;
    EXPECT_THROW(synthesize_trace(spec, 1), PreconditionError);
    spec = small_spec();
    spec.b_frames.dispersion = -0.1;
    EXPECT_THROW(synthesize_trace(spec, 1), PreconditionError);
}

TEST(Synthesize, EveryGeneratedTraceValidates) {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        SynthSpec spec = small_spec();
        spec.psnr = PsnrModel{35.0, 3.0};
        EXPECT_TRUE(validate(synthesize_trace(spec, seed)).empty());
    }
}

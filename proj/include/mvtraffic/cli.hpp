#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mvtraffic/trace.hpp"

namespace mvt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Environment variable consulted for the default --seed.
inline constexpr const char* kSeedEnv = "MVTRAFFIC_SEED";

// Runs one command line. args[0] is the program name. Reports go to `out`
// unless -o is given; diagnostics go to `err`; a trace path of "-" reads `in`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

// Synthesis spec file (JSON). Every key is optional:
//   {"video": "...", "representation": "MV", "views": 2, "frames": 240,
//    "fps": 24, "gop": 16, "pattern": "B1", "qp": 28,
//    "sizes": {"I": {"median": 20000, "dispersion": 0.2}, "P": {...}, "B": {...}},
//    "inter_view_scale": 0.6, "psnr": {"mean_db": 38, "jitter_db": 0.5}}
SynthSpec synth_spec_from_json(const std::string& text);
std::string synth_spec_to_json(const SynthSpec& spec);

}  // namespace mvt::cli

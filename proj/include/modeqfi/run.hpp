#pragma once

#include <optional>
#include <string>

#include "modeqfi/scenarios.hpp"

namespace modeqfi {

struct SweepSpec {
    std::string param;
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
};

struct RunConfig {
    std::string scenario;
    Params params;
    std::optional<SweepSpec> sweep;
    std::string output; // empty -> stdout
    enum class Format { json, csv } format = Format::json;
    bool oracle = false;
    std::optional<long> seed;
};

// Flat `key = value` lines, `#` comments, dotted sweep keys (sweep.param,
// sweep.lo, sweep.hi, sweep.n). Every key that is not a control key is a
// scenario parameter.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Evaluates the configured scenario (or sweep), writes one record per
// evaluation. Returns 0 on success, 2 on validation errors, 3 on numerical
// failures. Nothing is written unless validation passes.
int run(const RunConfig& config);

std::string list_scenarios();

} // namespace modeqfi

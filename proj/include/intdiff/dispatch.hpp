#pragma once

#include <ostream>
#include <string>

#include "json.hpp"

#include "intdiff/config.hpp"
#include "intdiff/errors.hpp"
#include "intdiff/io.hpp"

namespace intdiff {

/// Serializes with every floating-point number at 17 significant digits;
/// NaN and infinities become null.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

/// Single-line error object for standard error.
nlohmann::ordered_json error_json(const Error& e);

/// Runs the command and returns the artifacts it would write.
ArtifactSet run_command(const RunConfig& config);

/// 0 on success, 1 on a computational error, 2 on a configuration error.
int exit_code_for(const Error& e);

/// Runs the command, publishes its artifacts under config.output and
/// returns the exit code. Errors go to `err` as one line of JSON.
int dispatch(const RunConfig& config, std::ostream& err);

}  // namespace intdiff

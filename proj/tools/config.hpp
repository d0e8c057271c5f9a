#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "memsim/calib.hpp"
#include "memsim/circuit.hpp"
#include "memsim/memcell.hpp"

namespace memsim::cli {

/// Everything a run needs besides output paths, which come from flags.
struct RunConfig {
  memcell::CellConfig cell;
  circuit::StepPolicy solver;
  std::uint64_t seed = 0;  // reserved, nothing is stochastic yet
};

/// Fields absent from the document keep their defaults. Unknown keys and
/// invariant violations raise memcell::ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json fit_report_to_json(const calib::FitReport& report);
/// Reads the `leak` object of a fit report (or a bare {"g0","g1"} object).
LeakModel leak_from_json(const nlohmann::json& j);
LeakModel load_leak(const std::filesystem::path& path);

}  // namespace memsim::cli

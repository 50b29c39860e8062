#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "tweezer/engine.hpp"

namespace tweezer {

enum class SuccessDefinition {
  FirstAchievement,  // complete at any imaging up to cycle n
  Maintained,        // complete at the imaging of cycle n
};

enum class CiMethod { Normal, Wilson };

SuccessDefinition parse_success_definition(const std::string& text);
std::string to_string(SuccessDefinition d);
CiMethod parse_ci_method(const std::string& text);
std::string to_string(CiMethod m);

struct ExperimentConfig {
  EngineModels models;
  std::string layout_name = kPaperLayoutName;  // "inline" for a layout given in the file
  double p_blockade_plateau = 0.596;
  std::optional<double> p_blockade;  // overrides the plateau-derived value
  int replicas = 2500;
  int cycles = 15;
  std::uint64_t seed = 20220225;
  SuccessDefinition success = SuccessDefinition::FirstAchievement;
  CiMethod ci = CiMethod::Normal;
  int threads = 0;  // 0: hardware concurrency

  /// Recomputes models.extraction.p_blockade from the plateau unless set explicitly.
  void resolve();
  /// Validates ranges; throws std::invalid_argument naming the key.
  void validate() const;
};

/// Reads the INI dialect described in the README. Unknown keys are rejected.
/// Throws std::invalid_argument (bad values, unknown keys) or std::runtime_error (I/O).
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Serializes the fully resolved config; parse_config(write_config(c)) reproduces c.
std::string write_config(const ExperimentConfig& config);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace tweezer

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corrdet/config_opt.hpp"
#include "corrdet/detector.hpp"
#include "corrdet/exponent.hpp"
#include "corrdet/field_model.hpp"

namespace corrdet {

using json = nlohmann::json;

// Malformed or schema-violating configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Command options that may appear under "options" in a config file.
struct RunOptions {
  std::optional<std::vector<double>> alphas;
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max;
  std::optional<std::vector<int>> n_values;
  std::optional<double> tolerance;
  std::optional<int> threads;
};

struct ExperimentConfig {
  FieldParams field;
  std::optional<SensorLayout> layout;
  RunOptions options;
};

// Parsers reject unknown keys and wrong types with ConfigError.
FieldParams field_params_from_json(const json& j);
SensorLayout layout_from_json(const json& j);
ExperimentConfig experiment_config_from_json(const json& j);
ExperimentConfig load_experiment_config(const std::string& path);

json to_json(const FieldParams& p);
json to_json(const SensorLayout& layout);
json to_json(const ExponentResult& r);
json to_json(const OptimalSpacingResult& r);
json to_json(const SweepResult& s);
json to_json(const DetectionEstimate& e);
json to_json(const ValidationReport& r);

// CSV: one header row, '%.17g' numbers, '\n' line ends.
void write_csv(std::ostream& os, const SweepResult& s);
void write_csv(std::ostream& os, const std::vector<DetectionEstimate>& estimates);
void write_csv(std::ostream& os, const std::vector<OptimalSpacingResult>& curve);
void write_csv(std::ostream& os, const ExponentResult& r);

}  // namespace corrdet

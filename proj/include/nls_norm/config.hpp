#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nls_norm/energymap.hpp"
#include "nls_norm/solver.hpp"

namespace nls {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputBlock {
  std::string format = "json";  // json | csv
  std::string path;             // empty: stdout
  bool emit_profile = false;
  std::string profile_format = "binary";  // binary | text
  std::string profile_path;               // default: <path>.profile
};

struct RunConfig {
  Instance instance;
  nlohmann::json nonlinearity;  // block as written, for the digest
  std::optional<ExampleParams> example;
  SolverOptions solver;
  ScanOptions scan;
  std::vector<double> rho_list;
  int parallelism = 1;
  bool warm_start = true;
  double oracle_lambda = 1.0;
  std::vector<double> gn_p;
  OutputBlock output;
};

RunConfig parse_config_text(const std::string& yaml);
RunConfig load_config(const std::string& path);

// Builds a spec from a nonlinearity block; fills params for example builders.
NonlinearitySpec spec_from_json(const nlohmann::json& block, int N, std::optional<ExampleParams>* params = nullptr);

}  // namespace nls

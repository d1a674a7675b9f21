#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifslr/ifs.hpp"
#include "ifslr/path.hpp"

namespace ifslr::cli {

// Flat key = value file with [section] headers and '#' comments. Keys are
// validated against a fixed schema; unknown keys are rejected.
struct RunConfig {
  // [ifs]
  std::vector<double> ratios;
  std::vector<double> translations;  // defaults to all ones
  std::vector<double> probs;         // defaults to uniform

  // [run]
  uint64_t seed = 1;
  long long replicas = 1'000'000;
  int truncation = 200;

  // [moments]
  int moment_max_order = 2;

  // [response]
  std::string phi_kind = "power";  // power | bump | capped
  double phi_t = 2.0;
  int phi_r = 2;
  double phi_cap = 0.0;  // 0 = 10 E[X]
  double bump_center = 0.0, bump_inner = 0.0, bump_outer = 0.0;
  std::vector<int> response_orders = {1};
  std::string direction = "ratio 1";  // "ratio k" or "translation k", 1-based
  std::vector<double> fd_steps = {1e-4};
  std::string fd_scheme = "central2";
  double gate_z = 4.0;

  // [tail]
  std::vector<double> tail_thresholds = {10.0, 100.0, 1000.0};

  // [nondiff]
  char nd_regime = '?';  // '?' = pick the detected region (A first)
  int nd_n_lo = 2, nd_n_hi = 8;
  long long nd_tail_samples = 4096;
  long long nd_ball_replicas = 200'000;

  // [sample]
  long long sample_count = 10;
  int sample_deriv_order = 1;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

ProbabilisticIFS config_ifs(const RunConfig& cfg);
ParamDirection config_direction(const RunConfig& cfg, const ProbabilisticIFS& ifs);

}  // namespace ifslr::cli

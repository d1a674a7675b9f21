#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "ifslr/errors.hpp"

namespace ifslr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "bad number for '" + key + "': " + s);
  }
}

long long to_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadConfig, "bad integer for '" + key + "': " + s);
  }
}

std::vector<double> to_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) out.push_back(to_double(tok, key));
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  static const std::set<std::string> known = {
      "ifs.ratios", "ifs.translations", "ifs.probs",
      "run.seed", "run.replicas", "run.truncation",
      "moments.max_order",
      "response.phi", "response.t", "response.r", "response.cap",
      "response.bump_center", "response.bump_inner", "response.bump_outer",
      "response.orders", "response.direction", "response.fd_steps",
      "response.fd_scheme", "response.gate_z",
      "tail.thresholds",
      "nondiff.regime", "nondiff.n_lo", "nondiff.n_hi", "nondiff.tail_samples",
      "nondiff.ball_replicas",
      "sample.count", "sample.deriv_order",
  };

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorCode::BadConfig, "bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::BadConfig, "expected key = value at line " + std::to_string(lineno));
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known.count(key))
      throw Error(ErrorCode::BadConfig, "unknown key '" + key + "'");

    if (key == "ifs.ratios") cfg.ratios = to_doubles(value, key);
    else if (key == "ifs.translations") cfg.translations = to_doubles(value, key);
    else if (key == "ifs.probs") cfg.probs = to_doubles(value, key);
    else if (key == "run.seed") cfg.seed = uint64_t(to_int(value, key));
    else if (key == "run.replicas") cfg.replicas = to_int(value, key);
    else if (key == "run.truncation") cfg.truncation = int(to_int(value, key));
    else if (key == "moments.max_order") cfg.moment_max_order = int(to_int(value, key));
    else if (key == "response.phi") cfg.phi_kind = value;
    else if (key == "response.t") cfg.phi_t = to_double(value, key);
    else if (key == "response.r") cfg.phi_r = int(to_int(value, key));
    else if (key == "response.cap") cfg.phi_cap = to_double(value, key);
    else if (key == "response.bump_center") cfg.bump_center = to_double(value, key);
    else if (key == "response.bump_inner") cfg.bump_inner = to_double(value, key);
    else if (key == "response.bump_outer") cfg.bump_outer = to_double(value, key);
    else if (key == "response.orders") {
      cfg.response_orders.clear();
      for (const auto& tok : split_list(value)) cfg.response_orders.push_back(int(to_int(tok, key)));
    } else if (key == "response.direction") cfg.direction = value;
    else if (key == "response.fd_steps") cfg.fd_steps = to_doubles(value, key);
    else if (key == "response.fd_scheme") cfg.fd_scheme = value;
    else if (key == "response.gate_z") cfg.gate_z = to_double(value, key);
    else if (key == "tail.thresholds") cfg.tail_thresholds = to_doubles(value, key);
    else if (key == "nondiff.regime") {
      if (value != "A" && value != "B" && value != "auto")
        throw Error(ErrorCode::BadConfig, "nondiff.regime must be A, B or auto");
      cfg.nd_regime = value == "auto" ? '?' : value[0];
    } else if (key == "nondiff.n_lo") cfg.nd_n_lo = int(to_int(value, key));
    else if (key == "nondiff.n_hi") cfg.nd_n_hi = int(to_int(value, key));
    else if (key == "nondiff.tail_samples") cfg.nd_tail_samples = to_int(value, key);
    else if (key == "nondiff.ball_replicas") cfg.nd_ball_replicas = to_int(value, key);
    else if (key == "sample.count") cfg.sample_count = to_int(value, key);
    else if (key == "sample.deriv_order") cfg.sample_deriv_order = int(to_int(value, key));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ProbabilisticIFS config_ifs(const RunConfig& cfg) {
  if (cfg.ratios.size() < 2)
    throw Error(ErrorCode::BadConfig, "ifs.ratios needs at least two entries");
  std::vector<double> d = cfg.translations;
  if (d.empty()) d.assign(cfg.ratios.size(), 1.0);
  std::vector<double> p = cfg.probs;
  if (p.empty()) p.assign(cfg.ratios.size(), 1.0 / double(cfg.ratios.size()));
  if (d.size() != cfg.ratios.size() || p.size() != cfg.ratios.size())
    throw Error(ErrorCode::BadConfig, "ifs lists must have matching lengths");
  std::vector<AffineMap> maps;
  for (std::size_t i = 0; i < cfg.ratios.size(); ++i)
    maps.push_back({cfg.ratios[i], d[i]});
  return validate_ifs(std::move(maps), std::move(p));
}

ParamDirection config_direction(const RunConfig& cfg, const ProbabilisticIFS& ifs) {
  std::istringstream in(cfg.direction);
  std::string kind;
  int index = 0;
  in >> kind >> index;
  if (in.fail() || (kind != "ratio" && kind != "translation") || index < 1 ||
      std::size_t(index) > ifs.size())
    throw Error(ErrorCode::BadConfig,
                "direction must be 'ratio k' or 'translation k' with 1 <= k <= map count");
  return ParamDirection{kind == "ratio" ? ParamDirection::Kind::Ratio
                                        : ParamDirection::Kind::Translation,
                        index - 1};
}

}  // namespace ifslr::cli

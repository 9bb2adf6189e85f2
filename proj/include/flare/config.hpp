#pragma once
// Experiment config files: flat key/value entries grouped into [sections].
// Lines starting with '#' or ';' are comments. Keys are addressed as
// "section.key"; keys before any section header live in the "" section.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "flare/core.hpp"

namespace flare {

class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig parse(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(line);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError("line " + std::to_string(lineno) +
                            ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      cfg.values_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
  }

  static KvConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_real(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a real number: '" + it->second + "'");
    }
  }

  std::int64_t get_int(const std::string& key, std::int64_t dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      size_t pos = 0;
      std::int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not an integer: '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": not a boolean: '" + v + "'");
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// Section.key names for every HyperParams field.
inline const std::set<std::string>& hyperparam_keys() {
  static const std::set<std::string> keys = {
      "flare.alpha",      "flare.beta",      "flare.tau_d",
      "flare.lambda",     "flare.gamma",     "flare.delta",
      "flare.theta_base", "flare.rho_up",    "flare.rho_down",
      "flare.alpha_cov",  "flare.tau_conv",  "flare.theta_min",
      "flare.theta_max",  "flare.sigma_ldp", "flare.c_ldp",
      "training.rounds",  "training.cohort_size", "training.local_epochs",
      "training.learning_rate", "training.batch_size", "training.seed",
  };
  return keys;
}

// Populates HyperParams from a parsed document, filling omitted keys with
// the paper's defaults, and rejects invariant violations.
inline HyperParams validate_config(const KvConfig& cfg) {
  HyperParams hp;
  hp.alpha = cfg.get_real("flare.alpha", hp.alpha);
  hp.beta = cfg.get_real("flare.beta", hp.beta);
  hp.tau_d = cfg.get_real("flare.tau_d", hp.tau_d);
  hp.lambda = cfg.get_real("flare.lambda", hp.lambda);
  hp.gamma = cfg.get_real("flare.gamma", hp.gamma);
  hp.delta = cfg.get_real("flare.delta", hp.delta);
  hp.theta_base = cfg.get_real("flare.theta_base", hp.theta_base);
  hp.rho_up = cfg.get_real("flare.rho_up", hp.rho_up);
  hp.rho_down = cfg.get_real("flare.rho_down", hp.rho_down);
  hp.alpha_cov = cfg.get_real("flare.alpha_cov", hp.alpha_cov);
  hp.tau_conv = cfg.get_real("flare.tau_conv", hp.tau_conv);
  hp.theta_min = cfg.get_real("flare.theta_min", hp.theta_min);
  hp.theta_max = cfg.get_real("flare.theta_max", hp.theta_max);
  hp.sigma_ldp = cfg.get_real("flare.sigma_ldp", hp.sigma_ldp);
  hp.c_ldp = cfg.get_real("flare.c_ldp", hp.c_ldp);
  hp.rounds = int(cfg.get_int("training.rounds", hp.rounds));
  hp.cohort_size = int(cfg.get_int("training.cohort_size", hp.cohort_size));
  hp.local_epochs = int(cfg.get_int("training.local_epochs", hp.local_epochs));
  hp.learning_rate = cfg.get_real("training.learning_rate", hp.learning_rate);
  hp.batch_size = int(cfg.get_int("training.batch_size", hp.batch_size));
  hp.seed = std::uint64_t(cfg.get_int("training.seed", std::int64_t(hp.seed)));
  hp.check();
  return hp;
}

}  // namespace flare

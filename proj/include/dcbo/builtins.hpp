#pragma once

#include "dcbo/scm.hpp"

#include <string>
#include <vector>

namespace dcbo {

/// A named benchmark system: the model, its interventional domains (carried
/// by the Scm) and the observational sample counts per slice.
struct ExperimentSpec {
  std::string name;
  std::string description;
  Scm scm;
  std::vector<int> obs_samples;  // per slice
  bool stationary = true;        // licenses pooled observational fits
};

/// Registry of builtin experiments: stat, noisy, miss, multiv, ind, nonstat.
ExperimentSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace dcbo

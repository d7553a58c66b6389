#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "patchgauss/augment.hpp"

namespace patchgauss {

/// (corruption kind name, severity) -> error fraction. Kinds are free-form
/// names so that error maps from external benchmarks can be scored.
using ErrorMap = std::map<std::pair<std::string, int>, double>;
using CeMap = std::map<std::string, double>;

struct EvalResult {
  double clean_accuracy = 0.0;
  std::map<double, double> per_sigma_accuracy;
  ErrorMap per_corruption_error;
};

struct RobustnessReport {
  std::optional<double> relative_robustness;
  CeMap ce;
  double mce = 0.0;
  /// Absent when every kind in `ce` is a noise kind.
  std::optional<double> mce_minus_noise;
};

struct Candidate {
  std::string label;
  AugmentSpec spec;
  EvalResult eval;
};

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Mean accuracy over the six evaluation sigmas minus clean accuracy.
double relative_gaussian_robustness(const EvalResult& result);

/// CE per kind: sum over severities of model error divided by the same sum
/// for the baseline.
CeMap corruption_error(const ErrorMap& model_err, const ErrorMap& baseline_err);

/// Kinds dropped by the "(-noise)" variant.
bool is_noise_kind(const std::string& kind);

double mce(const CeMap& ce, bool exclude_noise);

/// Among candidates with clean accuracy >= z, the most robust one; if none
/// qualifies, the one with the highest clean accuracy. Ties go to the
/// earliest candidate. Returns the index into `candidates`.
std::size_t select_hparams_index(std::span<const Candidate> candidates, double z);
const Candidate& select_hparams(std::span<const Candidate> candidates, double z);

RobustnessReport build_report(const ErrorMap& model_err, const ErrorMap& baseline_err,
                              const EvalResult* eval = nullptr);

}  // namespace patchgauss

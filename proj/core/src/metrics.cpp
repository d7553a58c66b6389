#include "patchgauss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "patchgauss/corrupt.hpp"
#include "patchgauss/error.hpp"

namespace patchgauss {

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw Error("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double relative_gaussian_robustness(const EvalResult& result) {
  double sum = 0.0;
  for (double sigma : kEvalSigmas) {
    const auto it = result.per_sigma_accuracy.find(sigma);
    if (it == result.per_sigma_accuracy.end()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", sigma);
      throw Error(std::string("missing accuracy for sigma ") + buf);
    }
    sum += it->second - result.clean_accuracy;
  }
  return sum / static_cast<double>(kEvalSigmas.size());
}

CeMap corruption_error(const ErrorMap& model_err, const ErrorMap& baseline_err) {
  if (model_err.size() != baseline_err.size()) throw Error("error maps cover different keys");
  std::map<std::string, std::pair<double, double>> sums;
  auto b = baseline_err.begin();
  for (auto m = model_err.begin(); m != model_err.end(); ++m, ++b) {
    if (m->first != b->first) {
      throw Error("error maps cover different keys (" + m->first.first + " severity " +
                  std::to_string(m->first.second) + ")");
    }
    auto& [model_sum, base_sum] = sums[m->first.first];
    model_sum += m->second;
    base_sum += b->second;
  }
  CeMap ce;
  for (const auto& [kind, s] : sums) {
    if (!(s.second > 0.0)) throw Error("degenerate baseline");
    ce[kind] = s.first / s.second;
  }
  return ce;
}

bool is_noise_kind(const std::string& kind) {
  return kind == "gaussian_noise" || kind == "shot_noise" || kind == "impulse_noise";
}

double mce(const CeMap& ce, bool exclude_noise) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [kind, value] : ce) {
    if (exclude_noise && is_noise_kind(kind)) continue;
    sum += value;
    ++count;
  }
  if (count == 0) {
    throw Error(exclude_noise ? "no corruption kinds left after excluding noise" : "no corruption kinds");
  }
  return sum / static_cast<double>(count);
}

std::size_t select_hparams_index(std::span<const Candidate> candidates, double z) {
  if (candidates.empty()) throw Error("no candidates");
  std::optional<std::size_t> best;
  double best_robustness = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i].eval.clean_accuracy >= z)) continue;
    const double r = relative_gaussian_robustness(candidates[i].eval);
    if (!best || r > best_robustness) {
      best = i;
      best_robustness = r;
    }
  }
  if (best) return *best;
  std::size_t fallback = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].eval.clean_accuracy > candidates[fallback].eval.clean_accuracy) fallback = i;
  }
  return fallback;
}

const Candidate& select_hparams(std::span<const Candidate> candidates, double z) {
  return candidates[select_hparams_index(candidates, z)];
}

RobustnessReport build_report(const ErrorMap& model_err, const ErrorMap& baseline_err,
                              const EvalResult* eval) {
  RobustnessReport report;
  report.ce = corruption_error(model_err, baseline_err);
  report.mce = mce(report.ce, false);
  const bool has_other = std::any_of(report.ce.begin(), report.ce.end(),
                                     [](const auto& kv) { return !is_noise_kind(kv.first); });
  if (has_other) report.mce_minus_noise = mce(report.ce, true);
  if (eval) report.relative_robustness = relative_gaussian_robustness(*eval);
  return report;
}

}  // namespace patchgauss

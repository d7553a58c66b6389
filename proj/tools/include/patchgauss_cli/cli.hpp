#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <patchgauss/patchgauss.hpp>

namespace patchgauss::cli {

/// Flat key=value settings. A config file is loaded first; command-line
/// flags then override individual keys. Flag "--sigma-max" maps to key
/// "sigma_max".
class RunConfig {
 public:
  /// One "key = value" per line; '#' starts a comment line.
  static RunConfig parse(std::string_view text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::uint64_t uint(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;

  /// kind, patch_size, sigma_max, sample_up_to, order, pad. Fill defaults
  /// to mid-grey until a dataset supplies its channel mean.
  AugmentSpec augment_spec(std::size_t channels) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// "0.965" or "96.5%".
double parse_z(std::string_view text);

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// CSV "kind,severity,error"; an optional header row is skipped.
ErrorMap parse_error_map(std::string_view text);
std::string format_error_map(const ErrorMap& errors);

/// CSV "label,clean_acc,acc_0.1,...,acc_1.0"; an optional header row is
/// skipped.
std::vector<Candidate> parse_candidates(std::string_view text);

/// One integer per line.
std::vector<int> parse_predictions(std::string_view text);
std::string format_predictions(std::span<const int> predictions);

std::string report_json(const RobustnessReport& report);
std::string eval_json(const EvalResult& result);

/// Runs the command line in `args` (without the program name). Returns the
/// process exit code; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace patchgauss::cli

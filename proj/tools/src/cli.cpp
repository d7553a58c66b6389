#include "patchgauss_cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

namespace patchgauss::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    out.push_back(trim(text.substr(pos, end - pos)));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error("bad number for " + what + ": '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error("bad integer for " + what + ": '" + s + "'");
  }
  return v;
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig config;
  int line_no = 0;
  for (const auto& line : lines_of(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(line_no) + ": empty key");
    config.set(key, trim(std::string_view(line).substr(eq + 1)));
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  std::string k = key;
  std::replace(k.begin(), k.end(), '-', '_');
  values_[k] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw Error("missing required setting '" + key + "'");
  return it->second;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(it->second, key);
}

std::uint64_t RunConfig::uint(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error("bad non-negative integer for " + key + ": '" + s + "'");
  }
  return v;
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("bad boolean for " + key + ": '" + v + "'");
}

AugmentSpec RunConfig::augment_spec(std::size_t channels) const {
  AugmentSpec spec;
  spec.kind = parse_augment_kind(text("kind", "none"));
  spec.sigma_max = number("sigma_max", 0.0);
  spec.patch_size = static_cast<std::size_t>(uint("patch_size", 1));
  spec.sample_up_to = flag("sample_up_to", false);
  spec.order = parse_pipeline_order(text("order", "augment_then_flipcrop"));
  spec.pad = static_cast<std::size_t>(uint("pad", 0));
  spec.fill.values.assign(channels, 0.5);
  return spec;
}

double parse_z(std::string_view text) {
  std::string s = trim(text);
  bool percent = false;
  if (!s.empty() && s.back() == '%') {
    percent = true;
    s.pop_back();
  }
  double z = to_double(trim(s), "z");
  if (percent) z /= 100.0;
  if (!(z >= 0.0 && z <= 1.0)) throw Error("z must lie in [0, 1] (or [0%, 100%])");
  return z;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return {buf, ptr};
}

ErrorMap parse_error_map(std::string_view text) {
  ErrorMap out;
  bool first = true;
  for (const auto& line : lines_of(text)) {
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (first && !cells.empty() && cells[0] == "kind") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 3) throw Error("error map row needs kind,severity,error: '" + line + "'");
    const auto severity = static_cast<int>(to_int(cells[1], "severity"));
    const double err = to_double(cells[2], "error");
    if (!out.emplace(std::make_pair(cells[0], severity), err).second) {
      throw Error("duplicate error map entry " + cells[0] + "," + cells[1]);
    }
  }
  if (out.empty()) throw Error("empty error map");
  return out;
}

std::string format_error_map(const ErrorMap& errors) {
  std::string out = "kind,severity,error\n";
  for (const auto& [key, err] : errors) {
    out += key.first + "," + std::to_string(key.second) + "," + format_number(err) + "\n";
  }
  return out;
}

std::vector<Candidate> parse_candidates(std::string_view text) {
  std::vector<Candidate> out;
  bool first = true;
  for (const auto& line : lines_of(text)) {
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    if (first && !cells.empty() && cells[0] == "label") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 2 + kEvalSigmas.size()) {
      throw Error("candidate row needs label,clean_acc and " + std::to_string(kEvalSigmas.size()) +
                  " sigma accuracies: '" + line + "'");
    }
    Candidate c;
    c.label = cells[0];
    c.eval.clean_accuracy = to_double(cells[1], "clean_acc");
    for (std::size_t s = 0; s < kEvalSigmas.size(); ++s) {
      c.eval.per_sigma_accuracy[kEvalSigmas[s]] = to_double(cells[2 + s], "acc_" + format_number(kEvalSigmas[s]));
    }
    out.push_back(std::move(c));
  }
  if (out.empty()) throw Error("no candidates");
  return out;
}

std::vector<int> parse_predictions(std::string_view text) {
  std::vector<int> out;
  for (const auto& line : lines_of(text)) {
    if (line.empty()) continue;
    out.push_back(static_cast<int>(to_int(line, "prediction")));
  }
  return out;
}

std::string format_predictions(std::span<const int> predictions) {
  std::string out;
  for (int p : predictions) out += std::to_string(p) + "\n";
  return out;
}

std::string report_json(const RobustnessReport& report) {
  json j;
  j["ce"] = report.ce;
  j["mce"] = report.mce;
  j["mce_minus_noise"] = number_or_null(report.mce_minus_noise);
  j["relative_robustness"] = number_or_null(report.relative_robustness);
  return j.dump(2) + "\n";
}

std::string eval_json(const EvalResult& result) {
  json j;
  j["clean_accuracy"] = result.clean_accuracy;
  json sigmas = json::object();
  for (const auto& [sigma, acc] : result.per_sigma_accuracy) sigmas[format_number(sigma)] = acc;
  j["per_sigma_accuracy"] = sigmas;
  json errors = json::object();
  for (const auto& [key, err] : result.per_corruption_error) {
    errors[key.first + "/" + std::to_string(key.second)] = err;
  }
  j["per_corruption_error"] = errors;
  std::optional<double> robustness;
  if (result.per_sigma_accuracy.size() == kEvalSigmas.size()) robustness = relative_gaussian_robustness(result);
  j["relative_robustness"] = number_or_null(robustness);
  return j.dump(2) + "\n";
}

namespace {

unsigned workers(const RunConfig& config) {
  const auto t = config.uint("threads", 1);
  if (t < 1 || t > 1024) throw Error("threads must be in [1, 1024]");
  return static_cast<unsigned>(t);
}

std::vector<int> labels_for(const RunConfig& config) {
  if (config.has("labels")) return parse_predictions(read_text(config.text("labels")));
  return load_dataset(config.text("input")).labels;
}

LabeledDataset augment_cmd_dataset(const LabeledDataset& data, const RunConfig& config) {
  AugmentSpec spec = config.augment_spec(data.images.front().channels());
  spec.fill = channel_mean(data);
  return augment_dataset(data, spec, config.uint("seed", 0), workers(config));
}

int cmd_augment(const RunConfig& config, std::ostream& out) {
  const auto data = load_dataset(config.text("input"));
  const auto result = augment_cmd_dataset(data, config);
  if (config.has("contact_sheet")) {
    const auto count = std::min<std::size_t>(result.size(), config.uint("sheet_count", 64));
    const auto columns = std::max<std::size_t>(1, config.uint("sheet_columns", 8));
    const auto sheet = write_contact_sheet(std::span(result.images).first(count), columns);
    write_file_atomic(config.text("contact_sheet"), sheet);
  }
  write_dataset_dir(config.text("output"), result);
  out << "augmented " << result.size() << " images\n";
  return 0;
}

SeverityTable severity_table(const RunConfig& config) {
  if (!config.has("severity_table")) return SeverityTable::defaults();
  return SeverityTable::parse(read_text(config.text("severity_table")));
}

int cmd_corrupt(const RunConfig& config, std::ostream& out) {
  const auto data = load_dataset(config.text("input"));
  const fs::path output = config.text("output");
  const auto seed = config.uint("seed", 0);
  const auto w = workers(config);
  if (!config.has("corruption")) {
    const auto suite = gaussian_eval_suite(data, seed, w);
    for (const auto& [sigma, set] : suite) write_dataset_dir(output / ("sigma_" + format_number(sigma)), set);
    out << "wrote " << suite.size() << " gaussian_noise sets\n";
    return 0;
  }
  const auto kind = parse_corruption_kind(config.text("corruption"));
  if (config.has("param") && config.has("level")) throw Error("give either param or level, not both");
  std::vector<CorruptionSpec> specs;
  if (config.has("param")) {
    specs.push_back(CorruptionSpec::explicit_parameter(kind, config.number("param", 0.0)));
  } else if (config.has("level")) {
    specs.push_back(CorruptionSpec::from_level(kind, static_cast<int>(config.uint("level", 1)), severity_table(config)));
  } else {
    const auto table = severity_table(config);
    for (int level = 1; level <= kSeverityLevels; ++level) specs.push_back(CorruptionSpec::from_level(kind, level, table));
  }
  std::vector<std::pair<fs::path, LabeledDataset>> results;
  for (const auto& spec : specs) {
    fs::path dir = output;
    if (specs.size() > 1) dir /= std::string(to_string(kind)) + "_" + std::to_string(spec.level);
    results.emplace_back(dir, corrupt_dataset(data, spec, seed, w));
  }
  for (const auto& [dir, set] : results) write_dataset_dir(dir, set);
  out << "wrote " << results.size() << " " << to_string(kind) << " set(s)\n";
  return 0;
}

int cmd_predict(const RunConfig& config, std::ostream& out) {
  const auto model = decode_model(read_file(config.text("model")));
  const auto data = load_dataset(config.text("input"));
  const auto predictions = predict_all(model, data, workers(config));
  const auto text = format_predictions(predictions);
  if (config.has("output")) {
    write_text_atomic(config.text("output"), text);
  } else {
    out << text;
  }
  return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& out) {
  const auto labels = labels_for(config);
  EvalResult result;
  result.clean_accuracy = accuracy(parse_predictions(read_text(config.text("predictions"))), labels);
  // noisy = "0.1=path,0.2=path,..."
  if (config.has("noisy")) {
    for (const auto& item : split(config.text("noisy"), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error("noisy entries must be sigma=path");
      const double sigma = to_double(trim(item.substr(0, eq)), "sigma");
      if (std::find(kEvalSigmas.begin(), kEvalSigmas.end(), sigma) == kEvalSigmas.end()) {
        throw Error("sigma " + format_number(sigma) + " is not an evaluation sigma");
      }
      result.per_sigma_accuracy[sigma] = accuracy(parse_predictions(read_text(trim(item.substr(eq + 1)))), labels);
    }
  }
  const auto text = eval_json(result);
  if (config.has("output")) write_text_atomic(config.text("output"), text);
  out << text;
  return 0;
}

int cmd_mce(const RunConfig& config, std::ostream& out) {
  const auto model_err = parse_error_map(read_text(config.text("input")));
  const auto baseline_err = parse_error_map(read_text(config.text("baseline")));
  const auto report = build_report(model_err, baseline_err);
  std::ostringstream text;
  text.setf(std::ios::fixed);
  text.precision(3);
  for (const auto& [kind, ce] : report.ce) text << "CE " << kind << " " << ce << "\n";
  if (config.flag("exclude_noise", false)) {
    if (!report.mce_minus_noise) throw Error("mCE(-noise) is undefined: every corruption is a noise kind");
    text << "mCE(-noise) " << *report.mce_minus_noise << "\n";
  } else {
    text << "mCE " << report.mce << "\n";
    if (report.mce_minus_noise) text << "mCE(-noise) " << *report.mce_minus_noise << "\n";
  }
  if (config.has("output")) write_text_atomic(config.text("output"), report_json(report));
  out << text.str();
  return 0;
}

int cmd_select(const RunConfig& config, std::ostream& out) {
  const auto candidates = parse_candidates(read_text(config.text("input")));
  const double z = parse_z(config.text("z"));
  const auto index = select_hparams_index(candidates, z);
  const auto& winner = candidates[index];
  const bool qualified = winner.eval.clean_accuracy >= z;
  json j;
  j["index"] = index;
  j["label"] = winner.label;
  j["met_z"] = qualified;
  j["z"] = z;
  j["clean_accuracy"] = winner.eval.clean_accuracy;
  j["relative_robustness"] = relative_gaussian_robustness(winner.eval);
  if (config.has("output")) write_text_atomic(config.text("output"), j.dump(2) + "\n");
  out << winner.label << (qualified ? "" : " (no candidate met z; highest clean accuracy)") << "\n";
  return 0;
}

int cmd_fourier(const RunConfig& config, std::ostream& out) {
  const auto model = decode_model(read_file(config.text("model")));
  const auto data = load_dataset(config.text("input"));
  const auto& first = data.images.front();
  const int max_abs = config.has("max_freq") ? static_cast<int>(config.uint("max_freq", 0)) : -1;
  const auto freqs = half_plane_frequencies(first.height(), first.width(), max_abs);
  const auto probe = parse_probe(config.text("probe", "test_error"));
  const auto heatmap = sensitivity_heatmap(model, data, freqs, config.number("norm", 4.0), probe,
                                           config.uint("seed", 0), workers(config));
  const auto csv = heatmap.to_csv();
  if (config.has("ppm")) write_file_atomic(config.text("ppm"), heatmap.to_ppm());
  write_text_atomic(config.text("output"), csv);
  out << "heatmap " << heatmap.cells.size() << " frequencies\n";
  return 0;
}

int cmd_highpass(const RunConfig& config, std::ostream& out) {
  auto data = load_dataset(config.text("input"));
  const double radius = config.number("radius", 0.0);
  if (!(radius >= 0.0)) throw Error("radius must be >= 0");
  parallel_for(data.size(), workers(config), [&](std::size_t i) { data.images[i] = high_pass(data.images[i], radius); });
  write_dataset_dir(config.text("output"), data);
  out << "high-passed " << data.size() << " images at r=" << format_number(radius) << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  const auto data = load_dataset(config.text("input"));
  validate(data);
  const auto channels = data.images.front().channels();
  const int max_label = *std::max_element(data.labels.begin(), data.labels.end());
  TrainConfig tc;
  tc.epochs = config.uint("epochs", 10);
  tc.learning_rate = config.number("lr", 0.1);
  tc.batch_size = config.uint("batch_size", 32);
  tc.seed = config.uint("seed", 0);
  tc.augment = config.augment_spec(channels);
  tc.augment.fill = channel_mean(data);
  tc.standardize = config.flag("standardize", true);
  const auto classes = config.uint("classes", static_cast<std::uint64_t>(max_label + 1));
  auto model = init_toy_model(tc.seed, config.uint("filters", 64), channels, config.uint("grid", 2), classes);
  model = train(std::move(model), data, tc);
  write_file_atomic(config.text("output"), encode_model(model));
  const auto predictions = predict_all(model, data, workers(config));
  out << "train accuracy " << format_number(accuracy(predictions, data.labels)) << "\n";
  return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
  const auto data = synth_dataset(config.uint("seed", 0), config.uint("n", 1000));
  write_dataset_dir(config.text("output"), data);
  out << "synthesized " << data.size() << " images\n";
  return 0;
}

struct Command {
  const char* name;
  const char* help;
  int (*run)(const RunConfig&, std::ostream&);
  std::vector<const char*> keys;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> table = {
      {"augment", "Augment a dataset and write an IMGT directory", cmd_augment,
       {"input", "output", "seed", "kind", "sigma-max", "patch-size", "sample-up-to", "order", "pad",
        "contact-sheet", "sheet-count", "sheet-columns", "threads"}},
      {"corrupt", "Write the Gaussian evaluation suite or one corruption", cmd_corrupt,
       {"input", "output", "seed", "corruption", "level", "param", "severity-table", "threads"}},
      {"predict", "Run a checkpoint over a dataset and write predictions", cmd_predict,
       {"model", "input", "output", "threads"}},
      {"eval", "Score prediction files against labels", cmd_eval,
       {"input", "labels", "predictions", "noisy", "output"}},
      {"mce", "Corruption errors and mCE against a baseline error map", cmd_mce,
       {"input", "baseline", "exclude-noise", "output"}},
      {"select", "Apply the clean-accuracy threshold selection rule", cmd_select, {"input", "z", "output"}},
      {"fourier", "Fourier sensitivity heatmap of a checkpoint", cmd_fourier,
       {"model", "input", "output", "ppm", "seed", "norm", "probe", "max-freq", "threads"}},
      {"highpass", "High-pass filter every image of a dataset", cmd_highpass,
       {"input", "output", "radius", "threads"}},
      {"train", "Train the toy model and write a checkpoint", cmd_train,
       {"input", "output", "seed", "kind", "sigma-max", "patch-size", "sample-up-to", "order", "pad", "epochs",
        "lr", "batch-size", "filters", "grid", "classes", "standardize", "threads"}},
      {"synth", "Generate the synthetic frequency dataset", cmd_synth, {"output", "seed", "n"}},
  };
  return table;
}

bool is_switch(std::string_view key) { return key == "sample-up-to" || key == "exclude-noise"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch Gaussian augmentation and robustness toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value settings file; flags override it");

  std::map<std::string, std::string> given;
  std::map<std::string, bool> switches;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "key=value settings file; flags override it");
    for (const char* key : cmd.keys) {
      const std::string k = key;
      if (is_switch(k)) {
        sub->add_flag_function("--" + k, [&switches, k](std::int64_t) { switches[k] = true; });
      } else {
        sub->add_option_function<std::string>("--" + k, [&given, k](const std::string& v) { given[k] = v; });
      }
    }
    subs.emplace_back(sub, &cmd);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      for (const auto& [sub, cmd] : subs) {
        if (sub->parsed()) out << sub->help();
      }
      return 0;
    }
    err << "patchgauss: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = RunConfig::parse(read_text(config_path));
    for (const auto& [k, v] : given) config.set(k, v);
    for (const auto& [k, v] : switches) config.set(k, v ? "true" : "false");
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->run(config, out);
    }
    err << "patchgauss: no command\n";
    return 2;
  } catch (const std::exception& e) {
    err << "patchgauss: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace patchgauss::cli

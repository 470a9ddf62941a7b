// cosim: validate inputs, predict, evaluate and sweep combination configs.
//
// Exit status: 0 success, 1 validation failure, 2 runtime error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cosim/cosim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Args {
  std::string dataset;
  std::string language = "en";
  std::vector<std::string> embeddings;
  std::vector<std::string> configs;
  std::string sweep_file;
  int subtask = 1;
  std::string label;
  bool negate_change = false;
  bool per_context = false;
  std::string out;
  unsigned threads = 1;
  std::optional<std::string> timestamp;
};

/// Bad inputs rather than a failure while running.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

cosim::corpus::Dataset load_dataset(const Args& a) {
  const auto language = cosim::corpus::parse_language(a.language);
  auto in = open_in(a.dataset);
  return cosim::corpus::parse_dataset(in, language);
}

cosim::embedstore::EmbeddingStore load_store(const Args& a) {
  cosim::embedstore::EmbeddingStore store;
  for (const auto& path : a.embeddings) {
    auto in = open_in(path);
    try {
      store.merge(cosim::embedstore::read_store(in));
    } catch (const cosim::FormatError& e) {
      throw cosim::FormatError(path + ": " + e.what());
    }
  }
  return store;
}

cosim::harness::SweepSpec load_spec(const Args& a) {
  cosim::harness::SweepSpec spec;
  if (!a.sweep_file.empty()) {
    auto in = open_in(a.sweep_file);
    spec = cosim::harness::parse_sweep(in);
  }
  for (const auto& text : a.configs) {
    cosim::harness::SweepEntry e;
    e.config = cosim::combine::parse_config(text);
    e.label = cosim::combine::display_label(e.config);
    spec.configs.push_back(std::move(e));
  }
  for (auto& e : spec.configs) {
    e.options.negate_change = e.options.negate_change || a.negate_change;
    e.options.per_context = e.options.per_context || a.per_context;
  }
  return spec;
}

/// Writes to --out when given, stdout otherwise.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  fn(out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

bool is_invalid_input(const std::exception& e) {
  return dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const cosim::FormatError*>(&e) ||
         dynamic_cast<const cosim::AmbiguityError*>(&e) || dynamic_cast<const cosim::MismatchError*>(&e) ||
         dynamic_cast<const cosim::ValidationError*>(&e) || dynamic_cast<const cosim::ConfigError*>(&e) ||
         dynamic_cast<const cosim::harness::CoverageError*>(&e) ||
         dynamic_cast<const cosim::harness::UnknownLabelError*>(&e);
}

int report_diagnostics(const cosim::Diagnostics& diags) {
  for (const auto& d : diags) std::cerr << "invalid: " << d << '\n';
  return diags.empty() ? kOk : kInvalid;
}

int cmd_validate(const Args& a) {
  const auto ds = load_dataset(a);
  const auto store = load_store(a);
  const auto spec = load_spec(a);
  cosim::Diagnostics diags;
  if (spec.configs.empty()) {
    diags = cosim::corpus::validate_dataset(ds);
  } else {
    diags = cosim::harness::validate_run(ds, store, spec);
  }
  if (diags.empty()) {
    std::cout << "ok: " << ds.items.size() << " items, " << store.size() << " embedding records, "
              << spec.configs.size() << " configs\n";
  }
  return report_diagnostics(diags);
}

cosim::harness::EvaluationReport run(const Args& a, const cosim::corpus::Dataset& ds,
                                     const cosim::harness::SweepSpec& spec) {
  if (int rc = report_diagnostics(cosim::corpus::validate_dataset(ds)); rc != kOk) {
    throw InvalidInput("dataset failed validation");
  }
  const auto store = load_store(a);
  return cosim::harness::run_sweep(ds, store, spec, {a.threads, cosim::harness::resolve_timestamp(a.timestamp)});
}

int finish(const cosim::harness::EvaluationReport& report, const Args& a) {
  if (!a.out.empty()) with_output(a.out, [&](std::ostream& os) { cosim::harness::write_report(report, os); });
  cosim::harness::render_tables(report, std::cout);
  int rc = kOk;
  for (const auto& r : report.results) {
    if (r.failure) {
      std::cerr << "config '" << r.label << "' failed at item '" << r.failure->item_id << "': " << r.failure->message
                << '\n';
      rc = kRuntime;
    } else if (!r.score_error.empty()) {
      std::cerr << "config '" << r.label << "' could not be scored: " << r.score_error << '\n';
      rc = kRuntime;
    }
  }
  return rc;
}

int cmd_predict(const Args& a) {
  const auto ds = load_dataset(a);
  const auto spec = load_spec(a);
  if (spec.configs.empty()) throw InvalidInput("predict needs --config or --sweep-file");
  const std::string label = a.label.empty() ? spec.configs.front().label : a.label;
  const auto report = run(a, ds, spec);
  with_output(a.out, [&](std::ostream& os) { cosim::harness::emit_answers(report, a.subtask, label, os); });
  return kOk;
}

int cmd_evaluate(const Args& a) {
  const auto ds = load_dataset(a);
  if (!ds.has_gold()) throw InvalidInput("evaluate needs a dataset with gold columns");
  const auto spec = load_spec(a);
  if (spec.configs.size() != 1) throw InvalidInput("evaluate takes exactly one configuration; use sweep for more");
  return finish(run(a, ds, spec), a);
}

int cmd_sweep(const Args& a) {
  const auto ds = load_dataset(a);
  const auto spec = load_spec(a);
  if (spec.configs.empty()) throw InvalidInput("sweep needs --sweep-file or at least one --config");
  return finish(run(a, ds, spec), a);
}

void add_shared(CLI::App* cmd, Args& a, bool needs_embeddings) {
  cmd->add_option("--dataset", a.dataset, "Dataset file (tab-separated, <strong> markers)")->required();
  cmd->add_option("--language", a.language, "Dataset language: en, hr, sl, fi")->capture_default_str();
  auto* emb = cmd->add_option("--embeddings", a.embeddings, "Embedding record file (repeatable)");
  if (needs_embeddings) emb->required();
  cmd->add_option("--config", a.configs, "Combination config, e.g. 'bert@avg:14@first + elmo@last4@mean' (repeatable)");
  cmd->add_option("--sweep-file", a.sweep_file, "Sweep file, one JSON object per line");
  cmd->add_flag("--negate-change", a.negate_change, "Flip the sign of predicted change");
  cmd->add_flag("--per-context", a.per_context, "Score subtask 2 per context and average");
  cmd->add_option("--out", a.out, "Output path (stdout when omitted)");
  cmd->add_option("--threads", a.threads, "Worker threads per config")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graded word similarity in context: combine layer-wise embeddings, predict, and score"};
  app.set_version_flag("--version", std::string(cosim::kVersion));
  app.require_subcommand(1);
  Args a;

  auto* validate = app.add_subcommand("validate", "Check dataset, embeddings and configs without running");
  add_shared(validate, a, false);
  auto* predict = app.add_subcommand("predict", "Write an answer file for one config");
  add_shared(predict, a, true);
  predict->add_option("--subtask", a.subtask, "1 (change) or 2 (ratings)")->required()->check(CLI::IsMember({1, 2}));
  predict->add_option("--label", a.label, "Config label to emit when several are given");
  auto* evaluate = app.add_subcommand("evaluate", "Score one config against gold");
  add_shared(evaluate, a, true);
  auto* sweep = app.add_subcommand("sweep", "Run and score every config of a sweep");
  add_shared(sweep, a, true);
  for (auto* cmd : {evaluate, sweep}) {
    cmd->add_option("--timestamp", a.timestamp, "Report timestamp (default: SOURCE_DATE_EPOCH or now)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(a);
    if (*predict) return cmd_predict(a);
    if (*evaluate) return cmd_evaluate(a);
    if (*sweep) return cmd_sweep(a);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_invalid_input(e) ? kInvalid : kRuntime;
  }
  return kRuntime;
}

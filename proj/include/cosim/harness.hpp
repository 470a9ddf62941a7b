#pragma once

// Runs combination configs over a dataset, scores them, and serializes the
// result as a line-delimited report, answer files and score tables.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cosim/combine.hpp"
#include "cosim/config_syntax.hpp"
#include "cosim/corpus.hpp"
#include "cosim/diagnostic.hpp"
#include "cosim/embedstore.hpp"
#include "cosim/error.hpp"
#include "cosim/metrics.hpp"
#include "cosim/similarity.hpp"
#include "cosim/version.hpp"

namespace cosim::harness {

using similarity::ItemPrediction;

/// sim -> scale * sim + offset, applied to both ratings before answering.
struct AffineRescale {
  double scale = 1.0;
  double offset = 0.0;
  friend bool operator==(const AffineRescale&, const AffineRescale&) = default;
};

struct RunOptions {
  bool negate_change = false;
  std::optional<AffineRescale> rescale;
  bool per_context = false;
  friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

struct SweepEntry {
  std::string label;
  combine::CombinationConfig config;
  RunOptions options;
};

struct SweepSpec {
  std::vector<SweepEntry> configs;
};

struct ItemFailure {
  std::string item_id;
  std::string message;
};

struct ConfigResult {
  std::string label;
  std::string config_text;
  RunOptions options;
  /// Raw model predictions in dataset order; empty when `failure` is set.
  std::vector<ItemPrediction> predictions;
  std::optional<ItemFailure> failure;
  std::optional<metrics::ScoreReport> scores;
  std::string score_error;
};

struct EvaluationReport {
  corpus::Language language = corpus::Language::en;
  std::string timestamp;
  std::string tool_version = kVersion;
  std::size_t n_items = 0;
  std::vector<ConfigResult> results;

  const ConfigResult* find(std::string_view label) const {
    auto it = std::find_if(results.begin(), results.end(), [&](const auto& r) { return r.label == label; });
    return it == results.end() ? nullptr : &*it;
  }
};

struct RunSettings {
  unsigned threads = 1;
  std::string timestamp;
};

/// Embeddings demanded by a sweep are missing; lists every gap.
class CoverageError : public Error {
 public:
  explicit CoverageError(std::vector<embedstore::RecordKey> missing)
      : Error(describe(missing)), missing_(std::move(missing)) {}
  const std::vector<embedstore::RecordKey>& missing() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<embedstore::RecordKey>& missing) {
    std::string out = std::to_string(missing.size()) + " embedding record(s) missing:";
    for (const auto& k : missing) out += "\n  " + embedstore::to_string(k);
    return out;
  }
  std::vector<embedstore::RecordKey> missing_;
};

class UnknownLabelError : public Error {
 public:
  using Error::Error;
};

/// Answer values after the entry's options: optional rescale of both ratings,
/// change recomputed from them, then optional sign flip of change.
inline ItemPrediction apply_options(const ItemPrediction& raw, const RunOptions& options) {
  ItemPrediction out = raw;
  if (options.rescale) {
    out.sim1 = options.rescale->scale * raw.sim1 + options.rescale->offset;
    out.sim2 = options.rescale->scale * raw.sim2 + options.rescale->offset;
    out.change = out.sim2 - out.sim1;
  }
  if (options.negate_change) out.change = -out.change;
  return out;
}

inline Diagnostics validate_sweep_spec(const SweepSpec& spec) {
  Diagnostics out;
  std::set<std::string> seen;
  if (spec.configs.empty()) out.push_back({"sweep", "configs", "no configurations"});
  for (std::size_t i = 0; i < spec.configs.size(); ++i) {
    const auto& e = spec.configs[i];
    const std::string subject = e.label.empty() ? "config #" + std::to_string(i + 1) : e.label;
    if (e.label.empty()) out.push_back({subject, "label", "label is empty"});
    if (!e.label.empty() && !seen.insert(e.label).second) out.push_back({subject, "label", "duplicate label"});
    if (e.config.parts.empty()) out.push_back({subject, "config", "no parts"});
  }
  return out;
}

/// Every record key the sweep needs, without duplicates, in key order.
inline std::vector<embedstore::RecordKey> required_keys(const corpus::Dataset& ds, const SweepSpec& spec) {
  std::set<embedstore::RecordKey> keys;
  for (const auto& entry : spec.configs) {
    for (const auto& part : entry.config.parts) {
      for (const auto& item : ds.items) {
        for (int c = 1; c <= 2; ++c) {
          for (int w = 1; w <= 2; ++w) keys.insert({item.id, c, w, part.model_id});
        }
      }
    }
  }
  return {keys.begin(), keys.end()};
}

inline std::vector<embedstore::RecordKey> coverage_gaps(const corpus::Dataset& ds, const embedstore::EmbeddingStore& store,
                                                        const SweepSpec& spec) {
  std::vector<embedstore::RecordKey> gaps;
  for (auto& key : required_keys(ds, spec)) {
    if (!store.contains(key)) gaps.push_back(std::move(key));
  }
  return gaps;
}

/// Everything that would stop run_sweep, reported without running it.
inline Diagnostics validate_run(const corpus::Dataset& ds, const embedstore::EmbeddingStore& store,
                                const SweepSpec& spec) {
  Diagnostics out = corpus::validate_dataset(ds);
  for (auto& d : validate_sweep_spec(spec)) out.push_back(std::move(d));

  for (const auto& [key, rec] : store.records()) {
    const auto sig = store.signature(key.model_id);
    if (!sig || rec.signature() != *sig) {
      out.push_back({embedstore::to_string(key), "shape", "record shape differs from the model signature"});
    }
  }
  for (const auto& key : coverage_gaps(ds, store, spec)) {
    out.push_back({embedstore::to_string(key), "coverage", "embedding record missing"});
  }
  for (const auto& entry : spec.configs) {
    for (std::size_t p = 0; p < entry.config.parts.size(); ++p) {
      const auto& part = entry.config.parts[p];
      const auto sig = store.signature(part.model_id);
      if (!sig) continue;
      try {
        combine::check_scheme(part.scheme, sig->num_layers);
      } catch (const Error& e) {
        out.push_back({entry.label, "part " + std::to_string(p + 1) + " (" + part.model_id + ")", e.what()});
      }
    }
  }
  return out;
}

namespace detail {

struct ItemOutcome {
  std::optional<ItemPrediction> prediction;
  std::string error;
};

inline std::vector<ItemOutcome> predict_all(const corpus::Dataset& ds, const embedstore::EmbeddingStore& store,
                                            const combine::CombinationConfig& config, unsigned threads) {
  std::vector<ItemOutcome> outcomes(ds.items.size());
  auto work = [&](std::size_t i) {
    try {
      outcomes[i].prediction = similarity::predict_item(ds.items[i], store, config);
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ds.items.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < ds.items.size(); ++i) work(i);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < ds.items.size(); i = next++) work(i);
      });
    }
  }
  return outcomes;
}

}  // namespace detail

/// Predicts (and, with gold, scores) every config. Coverage is checked for
/// the whole sweep before any computation; an item-level error fails only
/// its own config, recording the first failing item in dataset order.
inline EvaluationReport run_sweep(const corpus::Dataset& ds, const embedstore::EmbeddingStore& store,
                                  const SweepSpec& spec, const RunSettings& settings = {}) {
  if (auto problems = validate_sweep_spec(spec); !problems.empty()) {
    std::string msg = "invalid sweep:";
    for (const auto& d : problems) msg += "\n  " + to_string(d);
    throw ValidationError(msg);
  }
  if (auto gaps = coverage_gaps(ds, store, spec); !gaps.empty()) throw CoverageError(std::move(gaps));

  EvaluationReport report;
  report.language = ds.language;
  report.timestamp = settings.timestamp;
  report.n_items = ds.items.size();
  const bool scored = ds.has_gold();
  const auto golds = scored ? metrics::gold_records(ds) : std::vector<metrics::GoldRecord>{};

  for (const auto& entry : spec.configs) {
    ConfigResult result;
    result.label = entry.label;
    result.config_text = combine::to_string(entry.config);
    result.options = entry.options;
    auto outcomes = detail::predict_all(ds, store, entry.config, settings.threads);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].prediction) {
        result.failure = ItemFailure{ds.items[i].id, outcomes[i].error};
        break;
      }
      result.predictions.push_back(std::move(*outcomes[i].prediction));
    }
    if (result.failure) {
      result.predictions.clear();
    } else if (scored) {
      std::vector<ItemPrediction> answers;
      for (const auto& p : result.predictions) answers.push_back(apply_options(p, entry.options));
      try {
        metrics::ScoreReport s;
        s.n_items = answers.size();
        s.subtask1_uncentered_pearson = metrics::score_subtask1(answers, golds);
        const auto st2 = metrics::score_subtask2(answers, golds, entry.options.per_context);
        s.subtask2_pearson = st2.pearson;
        s.subtask2_spearman = st2.spearman;
        s.subtask2_harmonic = st2.harmonic;
        result.scores = s;
      } catch (const Error& e) {
        result.score_error = e.what();
      }
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

inline std::string format_answer_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Submission lines for one config: subtask 1 `id<TAB>change`, subtask 2
/// `id<TAB>sim1<TAB>sim2`, in dataset order, options applied.
inline void emit_answers(const EvaluationReport& report, int subtask, std::string_view label, std::ostream& out) {
  if (subtask != 1 && subtask != 2) throw ContractError("subtask must be 1 or 2");
  const ConfigResult* r = report.find(label);
  if (!r) throw UnknownLabelError("no config labelled '" + std::string(label) + "' in report");
  if (r->failure) {
    throw Error("config '" + r->label + "' failed at item '" + r->failure->item_id + "': " + r->failure->message);
  }
  for (const auto& raw : r->predictions) {
    const ItemPrediction a = apply_options(raw, r->options);
    if (subtask == 1) {
      out << a.item_id << '\t' << format_answer_number(a.change) << '\n';
    } else {
      out << a.item_id << '\t' << format_answer_number(a.sim1) << '\t' << format_answer_number(a.sim2) << '\n';
    }
  }
}

inline std::string emit_answers(const EvaluationReport& report, int subtask, std::string_view label) {
  std::ostringstream out;
  emit_answers(report, subtask, label, out);
  return out.str();
}

/// Reads an answer file back. Subtask 1 fills only `change`; subtask 2
/// fills both ratings and derives `change`.
inline std::vector<ItemPrediction> parse_answers(std::istream& in, int subtask) {
  std::vector<ItemPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = corpus::detail::split_tabs(line);
    const std::size_t want = subtask == 1 ? 2 : 3;
    if (cols.size() != want) throw FormatError("expected " + std::to_string(want) + " columns", line_no);
    ItemPrediction p;
    p.item_id = cols[0];
    if (subtask == 1) {
      p.change = corpus::detail::parse_number(cols[1], "change", line_no);
    } else {
      p.sim1 = corpus::detail::parse_number(cols[1], "sim1", line_no);
      p.sim2 = corpus::detail::parse_number(cols[2], "sim2", line_no);
      p.change = p.sim2 - p.sim1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline nlohmann::ordered_json options_to_json(const RunOptions& o) {
  nlohmann::ordered_json j;
  j["negate_change"] = o.negate_change;
  j["per_context"] = o.per_context;
  if (o.rescale) {
    j["rescale"] = {{"scale", o.rescale->scale}, {"offset", o.rescale->offset}};
  } else {
    j["rescale"] = nullptr;
  }
  return j;
}

/// Line-delimited report: a header object, then per config one "config"
/// object followed by its "prediction" objects in dataset order.
inline void write_report(const EvaluationReport& report, std::ostream& out) {
  nlohmann::ordered_json header;
  header["type"] = "header";
  header["tool"] = "cosim";
  header["version"] = report.tool_version;
  header["language"] = corpus::to_string(report.language);
  header["timestamp"] = report.timestamp;
  header["n_items"] = report.n_items;
  header["n_configs"] = report.results.size();
  out << header.dump() << '\n';
  for (const auto& r : report.results) {
    nlohmann::ordered_json c;
    c["type"] = "config";
    c["label"] = r.label;
    c["config"] = r.config_text;
    c["options"] = options_to_json(r.options);
    c["status"] = r.failure ? "failed" : "ok";
    if (r.failure) c["failure"] = {{"item_id", r.failure->item_id}, {"message", r.failure->message}};
    if (r.scores) {
      nlohmann::ordered_json s;
      s["n_items"] = r.scores->n_items;
      s["subtask1_uncentered_pearson"] = r.scores->subtask1_uncentered_pearson;
      s["subtask2_pearson"] = r.scores->subtask2_pearson;
      s["subtask2_spearman"] = r.scores->subtask2_spearman;
      s["subtask2_harmonic"] = r.scores->subtask2_harmonic;
      c["scores"] = std::move(s);
    }
    if (!r.score_error.empty()) c["score_error"] = r.score_error;
    out << c.dump() << '\n';
    for (const auto& p : r.predictions) {
      nlohmann::ordered_json j;
      j["type"] = "prediction";
      j["label"] = r.label;
      j["item_id"] = p.item_id;
      j["sim1"] = p.sim1;
      j["sim2"] = p.sim2;
      j["change"] = p.change;
      out << j.dump() << '\n';
    }
  }
}

inline std::string write_report(const EvaluationReport& report) {
  std::ostringstream out;
  write_report(report, out);
  return out.str();
}

namespace detail {

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline void render_one(const EvaluationReport& report, int subtask, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::optional<double> best;
  auto score_of = [&](const ConfigResult& r) -> std::optional<double> {
    if (!r.scores) return std::nullopt;
    return subtask == 1 ? r.scores->subtask1_uncentered_pearson : r.scores->subtask2_harmonic;
  };
  for (const auto& r : report.results) {
    if (auto s = score_of(r); s && (!best || *s > *best)) best = s;
  }
  for (const auto& r : report.results) {
    std::string cell;
    if (r.failure) {
      cell = "failed";
    } else if (auto s = score_of(r)) {
      cell = fixed3(*s);
      if (best && fixed3(*best) == cell) cell = "**" + cell + "**";
    } else {
      cell = "n/a";
    }
    rows.emplace_back(r.label, cell);
  }
  std::size_t w1 = 5, w2 = 5;
  for (const auto& [a, b] : rows) {
    w1 = std::max(w1, a.size());
    w2 = std::max(w2, b.size());
  }
  out << "Subtask " << subtask << " results (" << corpus::to_string(report.language) << ", " << report.n_items
      << " items)\n";
  out << "| " << std::left << std::setw(static_cast<int>(w1)) << "Model" << " | " << std::setw(static_cast<int>(w2))
      << "Score" << " |\n";
  out << "|" << std::string(w1 + 2, '-') << "|" << std::string(w2 + 2, '-') << "|\n";
  for (const auto& [a, b] : rows) {
    out << "| " << std::setw(static_cast<int>(w1)) << a << " | " << std::setw(static_cast<int>(w2)) << b << " |\n";
  }
  out << std::right;
}

}  // namespace detail

/// Two Model/Score tables, one per subtask; the best score is in bold.
inline void render_tables(const EvaluationReport& report, std::ostream& out) {
  detail::render_one(report, 1, out);
  out << '\n';
  detail::render_one(report, 2, out);
}

inline std::string render_tables(const EvaluationReport& report) {
  std::ostringstream out;
  render_tables(report, out);
  return out.str();
}

/// Sweep file: one JSON object per line with `label` and `config` (config
/// mini-language), optional `negate_change`, `per_context` and
/// `rescale: {scale, offset}`. Blank lines and lines starting with '#' are
/// skipped.
inline SweepSpec parse_sweep(std::istream& in) {
  SweepSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw FormatError("sweep entry must be a JSON object", line_no);
      SweepEntry e;
      if (!j.contains("label") || !j["label"].is_string()) throw FormatError("sweep entry needs a string 'label'", line_no);
      if (!j.contains("config") || !j["config"].is_string()) {
        throw FormatError("sweep entry needs a string 'config'", line_no);
      }
      e.label = j["label"].get<std::string>();
      e.config = combine::parse_config(j["config"].get<std::string>());
      e.options.negate_change = j.value("negate_change", false);
      e.options.per_context = j.value("per_context", false);
      if (j.contains("rescale") && !j["rescale"].is_null()) {
        const auto& r = j["rescale"];
        e.options.rescale = AffineRescale{r.value("scale", 1.0), r.value("offset", 0.0)};
      }
      spec.configs.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed sweep entry: ") + e.what(), line_no);
    } catch (const ConfigError& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  return spec;
}

inline SweepSpec parse_sweep(std::string_view content) {
  std::istringstream in{std::string(content)};
  return parse_sweep(in);
}

/// ISO-8601 UTC stamp: explicit value, else SOURCE_DATE_EPOCH, else now.
inline std::string resolve_timestamp(const std::optional<std::string>& explicit_value = std::nullopt) {
  if (explicit_value) return *explicit_value;
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cosim::harness

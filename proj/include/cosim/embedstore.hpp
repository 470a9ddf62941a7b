#pragma once

// Layer-wise embedding interchange: one JSON object per line, each holding all
// layers of every sub-token of one target word under one model.

#include <cmath>
#include <compare>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cosim/error.hpp"

namespace cosim::embedstore {

/// All layer vectors of one sub-token. Layer 0 is the input-most layer,
/// layer L-1 the final output.
class LayerStack {
 public:
  LayerStack() = default;

  LayerStack(std::size_t num_layers, std::size_t dim, std::vector<double> values)
      : num_layers_(num_layers), dim_(dim), values_(std::move(values)) {
    if (num_layers_ == 0 || dim_ == 0) throw ContractError("layer stack needs L >= 1 and d >= 1");
    if (values_.size() != num_layers_ * dim_) throw ContractError("layer stack value count != L * d");
    for (double v : values_) {
      if (!std::isfinite(v)) throw ContractError("layer stack contains a non-finite value");
    }
  }

  static LayerStack from_layers(const std::vector<std::vector<double>>& layers) {
    if (layers.empty()) throw ContractError("layer stack needs at least one layer");
    const std::size_t d = layers.front().size();
    std::vector<double> flat;
    flat.reserve(layers.size() * d);
    for (const auto& layer : layers) {
      if (layer.size() != d) throw ContractError("layers of one stack must share a dimension");
      flat.insert(flat.end(), layer.begin(), layer.end());
    }
    return LayerStack(layers.size(), d, std::move(flat));
  }

  std::size_t num_layers() const noexcept { return num_layers_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> layer(std::size_t index) const {
    if (index >= num_layers_) throw RangeError("layer index " + std::to_string(index) + " >= L = " + std::to_string(num_layers_));
    return {values_.data() + index * dim_, dim_};
  }

  std::span<const double> values() const noexcept { return values_; }

  void scale(double factor) {
    for (double& v : values_) v *= factor;
  }

  /// Equality at 32-bit float precision, the contract precision of the format.
  friend bool operator==(const LayerStack& a, const LayerStack& b) {
    if (a.num_layers_ != b.num_layers_ || a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
      if (static_cast<float>(a.values_[i]) != static_cast<float>(b.values_[i])) return false;
    }
    return true;
  }

 private:
  std::size_t num_layers_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct SubtokenEmbedding {
  std::string text;
  LayerStack stack;

  friend bool operator==(const SubtokenEmbedding&, const SubtokenEmbedding&) = default;
};

struct RecordKey {
  std::string item_id;
  int context_no = 1;
  int word_no = 1;
  std::string model_id;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
  friend bool operator==(const RecordKey&, const RecordKey&) = default;
};

inline std::string to_string(const RecordKey& k) {
  return "(item=" + k.item_id + ", context=" + std::to_string(k.context_no) + ", word=" + std::to_string(k.word_no) +
         ", model=" + k.model_id + ")";
}

struct Signature {
  std::size_t num_layers = 0;
  std::size_t dim = 0;

  friend bool operator==(const Signature&, const Signature&) = default;
};

inline std::string to_string(const Signature& s) {
  return "(L=" + std::to_string(s.num_layers) + ", d=" + std::to_string(s.dim) + ")";
}

/// All sub-tokens of one target word in one context under one model, in
/// occurrence order.
struct TargetEmbeddingRecord {
  std::string item_id;
  int context_no = 1;
  int word_no = 1;
  std::string model_id;
  std::vector<SubtokenEmbedding> subtokens;

  RecordKey key() const { return {item_id, context_no, word_no, model_id}; }

  Signature signature() const {
    if (subtokens.empty()) return {};
    return {subtokens.front().stack.num_layers(), subtokens.front().stack.dim()};
  }

  friend bool operator==(const TargetEmbeddingRecord&, const TargetEmbeddingRecord&) = default;
};

/// Raised by EmbeddingStore::lookup; carries the full missing key.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(RecordKey key) : Error("no embedding record for " + to_string(key)), key_(std::move(key)) {}
  const RecordKey& key() const noexcept { return key_; }

 private:
  RecordKey key_;
};

class EmbeddingStore {
 public:
  /// Adds a record, enforcing key uniqueness and the model's (L, d).
  void insert(TargetEmbeddingRecord record) {
    check_record(record);
    const RecordKey key = record.key();
    if (records_.count(key)) throw FormatError("duplicate record key " + to_string(key));
    const Signature sig = record.signature();
    auto [it, fresh] = signatures_.try_emplace(record.model_id, sig);
    if (!fresh && it->second != sig) {
      throw FormatError("record " + to_string(key) + " has shape " + to_string(sig) + " but model '" + record.model_id +
                        "' was first seen with " + to_string(it->second) + " in record " +
                        to_string(first_key_.at(record.model_id)));
    }
    if (fresh) first_key_.emplace(record.model_id, key);
    records_.emplace(key, std::move(record));
  }

  const TargetEmbeddingRecord* find(const RecordKey& key) const {
    auto it = records_.find(key);
    return it == records_.end() ? nullptr : &it->second;
  }

  const TargetEmbeddingRecord& lookup(const RecordKey& key) const {
    if (const auto* r = find(key)) return *r;
    throw NotFoundError(key);
  }

  const TargetEmbeddingRecord& lookup(std::string_view item_id, int context_no, int word_no,
                                      std::string_view model_id) const {
    return lookup(RecordKey{std::string(item_id), context_no, word_no, std::string(model_id)});
  }

  bool contains(const RecordKey& key) const { return records_.count(key) != 0; }

  std::optional<Signature> signature(std::string_view model_id) const {
    auto it = signatures_.find(std::string(model_id));
    if (it == signatures_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> models() const {
    std::vector<std::string> out;
    for (const auto& [m, _] : signatures_) out.push_back(m);
    return out;
  }

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Records in key order.
  const std::map<RecordKey, TargetEmbeddingRecord>& records() const noexcept { return records_; }

  /// Moves every record of `other` in; same uniqueness and shape rules.
  void merge(EmbeddingStore other) {
    for (auto& [key, rec] : other.records_) insert(std::move(rec));
  }

  /// Multiplies every vector of one model by `factor`.
  void scale_model(std::string_view model_id, double factor) {
    for (auto& [key, rec] : records_) {
      if (key.model_id != model_id) continue;
      for (auto& st : rec.subtokens) st.stack.scale(factor);
    }
  }

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) { return a.records_ == b.records_; }

  static void check_record(const TargetEmbeddingRecord& r) {
    const std::string where = to_string(r.key());
    if (r.item_id.empty()) throw FormatError("record with empty item_id");
    if (r.model_id.empty()) throw FormatError("record " + where + " has an empty model id");
    if (r.context_no != 1 && r.context_no != 2) throw FormatError("record " + where + ": context must be 1 or 2");
    if (r.word_no != 1 && r.word_no != 2) throw FormatError("record " + where + ": word must be 1 or 2");
    if (r.subtokens.empty()) throw FormatError("record " + where + " has no sub-tokens");
    const Signature sig = r.signature();
    for (const auto& st : r.subtokens) {
      if (st.text.empty()) throw FormatError("record " + where + " has a sub-token with empty text");
      if (st.stack.num_layers() != sig.num_layers || st.stack.dim() != sig.dim) {
        throw FormatError("record " + where + ": sub-token stacks differ in (L, d)");
      }
    }
  }

 private:
  std::map<RecordKey, TargetEmbeddingRecord> records_;
  std::map<std::string, Signature> signatures_;
  std::map<std::string, RecordKey> first_key_;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + field + "'");
  return *it;
}

inline int slot_number(const json& v, const char* field) {
  if (!v.is_number_integer()) throw std::invalid_argument(std::string("field '") + field + "' must be 1 or 2");
  const auto n = v.get<long long>();
  if (n != 1 && n != 2) throw std::invalid_argument(std::string("field '") + field + "' must be 1 or 2");
  return static_cast<int>(n);
}

inline TargetEmbeddingRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
  TargetEmbeddingRecord rec;
  const json& item = require(obj, "item_id");
  const json& model = require(obj, "model");
  if (!item.is_string() || !model.is_string()) throw std::invalid_argument("item_id and model must be strings");
  rec.item_id = item.get<std::string>();
  rec.model_id = model.get<std::string>();
  rec.context_no = slot_number(require(obj, "context"), "context");
  rec.word_no = slot_number(require(obj, "word"), "word");
  const json& subs = require(obj, "subtokens");
  if (!subs.is_array() || subs.empty()) throw std::invalid_argument("'subtokens' must be a non-empty array");
  for (const json& st : subs) {
    if (!st.is_object()) throw std::invalid_argument("sub-token entries must be objects");
    const json& text = require(st, "text");
    const json& layers = require(st, "layers");
    if (!text.is_string()) throw std::invalid_argument("sub-token 'text' must be a string");
    if (!layers.is_array() || layers.empty()) throw std::invalid_argument("'layers' must be a non-empty array");
    const std::size_t num_layers = layers.size();
    const std::size_t dim = layers.front().is_array() ? layers.front().size() : 0;
    if (dim == 0) throw std::invalid_argument("each layer must be a non-empty array of numbers");
    std::vector<double> flat;
    flat.reserve(num_layers * dim);
    for (const json& layer : layers) {
      if (!layer.is_array() || layer.size() != dim) throw std::invalid_argument("layers of one sub-token differ in dimension");
      for (const json& v : layer) {
        if (!v.is_number()) throw std::invalid_argument("layer values must be numbers");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw std::invalid_argument("layer value is not finite");
        flat.push_back(x);
      }
    }
    rec.subtokens.push_back({text.get<std::string>(), LayerStack(num_layers, dim, std::move(flat))});
  }
  return rec;
}

inline nlohmann::ordered_json record_to_json(const TargetEmbeddingRecord& rec) {
  nlohmann::ordered_json obj;
  obj["item_id"] = rec.item_id;
  obj["context"] = rec.context_no;
  obj["word"] = rec.word_no;
  obj["model"] = rec.model_id;
  auto subs = nlohmann::ordered_json::array();
  for (const auto& st : rec.subtokens) {
    auto layers = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < st.stack.num_layers(); ++l) {
      auto layer = st.stack.layer(l);
      layers.push_back(std::vector<double>(layer.begin(), layer.end()));
    }
    nlohmann::ordered_json entry;
    entry["text"] = st.text;
    entry["layers"] = std::move(layers);
    subs.push_back(std::move(entry));
  }
  obj["subtokens"] = std::move(subs);
  return obj;
}

}  // namespace detail

/// Reads a record file. Blank lines are ignored; every other line must be a
/// complete record object.
inline EmbeddingStore read_store(std::istream& in) {
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    TargetEmbeddingRecord rec;
    try {
      rec = detail::record_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), line_no);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), line_no);
    } catch (const ContractError& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), line_no);
    }
    try {
      store.insert(std::move(rec));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  return store;
}

inline EmbeddingStore read_store(std::string_view content) {
  std::istringstream in{std::string(content)};
  return read_store(in);
}

/// One line per record in key order; empty store writes nothing.
inline void write_store(const EmbeddingStore& store, std::ostream& out) {
  for (const auto& [key, rec] : store.records()) out << detail::record_to_json(rec).dump() << '\n';
}

inline std::string write_store(const EmbeddingStore& store) {
  std::ostringstream out;
  write_store(store, out);
  return out.str();
}

}  // namespace cosim::embedstore

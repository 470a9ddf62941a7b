#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "cosim/combine.hpp"
#include "cosim/corpus.hpp"
#include "cosim/embedstore.hpp"
#include "cosim/error.hpp"

namespace cosim::similarity {

/// Both subtasks' predictions for one item; change = sim2 - sim1.
struct ItemPrediction {
  std::string item_id;
  double sim1 = 0;
  double sim2 = 0;
  double change = 0;

  friend bool operator==(const ItemPrediction&, const ItemPrediction&) = default;
};

/// Cosine similarity, clamped to [-1, 1].
inline double cosine(std::span<const double> v, std::span<const double> w) {
  if (v.size() != w.size()) {
    throw ContractError("cosine of vectors with dimensions " + std::to_string(v.size()) + " and " +
                        std::to_string(w.size()));
  }
  long double dot = 0, vv = 0, ww = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    dot += static_cast<long double>(v[i]) * w[i];
    vv += static_cast<long double>(v[i]) * v[i];
    ww += static_cast<long double>(w[i]) * w[i];
  }
  if (vv == 0) throw DegenerateError("cosine: first vector has zero norm");
  if (ww == 0) throw DegenerateError("cosine: second vector has zero norm");
  const long double c = dot / (std::sqrt(vv) * std::sqrt(ww));
  return std::clamp(static_cast<double>(c), -1.0, 1.0);
}

/// Stacked vector for one (context, word) slot of an item.
inline combine::Vector slot_vector(const corpus::DatasetItem& item, int context_no, int word_no,
                                   const embedstore::EmbeddingStore& store, const combine::CombinationConfig& config) {
  std::vector<const embedstore::TargetEmbeddingRecord*> records;
  records.reserve(config.parts.size());
  for (const auto& part : config.parts) {
    records.push_back(&store.lookup(item.id, context_no, word_no, part.model_id));
  }
  return combine::word_vector(records, config);
}

inline ItemPrediction predict_item(const corpus::DatasetItem& item, const embedstore::EmbeddingStore& store,
                                   const combine::CombinationConfig& config) {
  ItemPrediction p;
  p.item_id = item.id;
  try {
    const auto c1w1 = slot_vector(item, 1, 1, store, config);
    const auto c1w2 = slot_vector(item, 1, 2, store, config);
    const auto c2w1 = slot_vector(item, 2, 1, store, config);
    const auto c2w2 = slot_vector(item, 2, 2, store, config);
    p.sim1 = cosine(c1w1, c1w2);
    p.sim2 = cosine(c2w1, c2w2);
  } catch (const DegenerateError& e) {
    throw DegenerateError("item '" + item.id + "': " + e.what());
  }
  p.change = p.sim2 - p.sim1;
  return p;
}

}  // namespace cosim::similarity

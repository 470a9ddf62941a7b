#pragma once

// Word vectors from layer stacks: layer combination per sub-token, then
// sub-token pooling, then concatenation across models (stacking).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cosim/embedstore.hpp"
#include "cosim/error.hpp"

namespace cosim::combine {

using Vector = std::vector<double>;

/// Concatenation of the last n layers, final layer first.
struct ConcatLast {
  std::size_t n = 4;
  friend bool operator==(const ConcatLast&, const ConcatLast&) = default;
};

/// Mean of the last k layers.
struct AverageLast {
  std::size_t k = 1;
  friend bool operator==(const AverageLast&, const AverageLast&) = default;
};

/// gamma * sum_l softmax(raw_weights)_l * layer_l over all layers. An empty
/// weight list stands for uniform weights of whatever length L the stack has.
struct ScalarMix {
  std::vector<double> raw_weights;
  double gamma = 1.0;
  friend bool operator==(const ScalarMix&, const ScalarMix&) = default;
};

/// One layer. Negative indices count from the output (-1 = final layer),
/// non-negative ones from the input (0 = input-most layer).
struct SingleLayer {
  long index = -1;
  friend bool operator==(const SingleLayer&, const SingleLayer&) = default;
};

using LayerScheme = std::variant<ConcatLast, AverageLast, ScalarMix, SingleLayer>;

enum class PoolingStrategy { first, last, first_last, mean };

struct CombinationPart {
  std::string model_id;
  LayerScheme scheme = ConcatLast{4};
  PoolingStrategy pooling = PoolingStrategy::first;
  friend bool operator==(const CombinationPart&, const CombinationPart&) = default;
};

struct CombinationConfig {
  std::vector<CombinationPart> parts;
  friend bool operator==(const CombinationConfig&, const CombinationConfig&) = default;
};

namespace detail {

inline std::size_t resolve_single(const SingleLayer& s, std::size_t num_layers) {
  const long L = static_cast<long>(num_layers);
  const long idx = s.index < 0 ? L + s.index : s.index;
  if (idx < 0 || idx >= L) {
    throw RangeError("layer index " + std::to_string(s.index) + " outside a stack of " + std::to_string(num_layers) +
                     " layers");
  }
  return static_cast<std::size_t>(idx);
}

// softmax in extended precision with the usual max shift
inline std::vector<long double> softmax(std::span<const double> raw) {
  std::vector<long double> out(raw.size());
  const long double mx = *std::max_element(raw.begin(), raw.end());
  long double total = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::exp(static_cast<long double>(raw[i]) - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace detail

/// Throws RangeError/ConfigError when `scheme` cannot apply to L layers.
inline void check_scheme(const LayerScheme& scheme, std::size_t num_layers) {
  std::visit(detail::overloaded{
                 [&](const ConcatLast& s) {
                   if (s.n < 1 || s.n > num_layers) {
                     throw RangeError("concat_last(" + std::to_string(s.n) + ") needs 1 <= n <= L = " +
                                      std::to_string(num_layers));
                   }
                 },
                 [&](const AverageLast& s) {
                   if (s.k < 1 || s.k > num_layers) {
                     throw RangeError("average_last(" + std::to_string(s.k) + ") needs 1 <= k <= L = " +
                                      std::to_string(num_layers));
                   }
                 },
                 [&](const ScalarMix& s) {
                   if (!std::isfinite(s.gamma)) throw ConfigError("scalar mix gamma must be finite");
                   if (!s.raw_weights.empty() && s.raw_weights.size() != num_layers) {
                     throw ConfigError("scalar mix has " + std::to_string(s.raw_weights.size()) +
                                       " weights for a stack of " + std::to_string(num_layers) + " layers");
                   }
                   for (double w : s.raw_weights) {
                     if (!std::isfinite(w)) throw ConfigError("scalar mix weights must be finite");
                   }
                 },
                 [&](const SingleLayer& s) { detail::resolve_single(s, num_layers); },
             },
             scheme);
}

/// Output dimension of `scheme` on layers of dimension d.
inline std::size_t scheme_output_dim(const LayerScheme& scheme, std::size_t dim) {
  if (const auto* c = std::get_if<ConcatLast>(&scheme)) return c->n * dim;
  return dim;
}

inline std::size_t pooled_output_dim(PoolingStrategy pooling, std::size_t dim) {
  return pooling == PoolingStrategy::first_last ? 2 * dim : dim;
}

inline Vector combine_layers(const embedstore::LayerStack& stack, const LayerScheme& scheme) {
  const std::size_t L = stack.num_layers();
  const std::size_t d = stack.dim();
  check_scheme(scheme, L);
  return std::visit(
      detail::overloaded{
          [&](const ConcatLast& s) {
            Vector out;
            out.reserve(s.n * d);
            for (std::size_t j = 1; j <= s.n; ++j) {
              auto layer = stack.layer(L - j);
              out.insert(out.end(), layer.begin(), layer.end());
            }
            return out;
          },
          [&](const AverageLast& s) {
            std::vector<long double> acc(d, 0.0L);
            for (std::size_t l = L - s.k; l < L; ++l) {
              auto layer = stack.layer(l);
              for (std::size_t i = 0; i < d; ++i) acc[i] += layer[i];
            }
            Vector out(d);
            for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<double>(acc[i] / static_cast<long double>(s.k));
            return out;
          },
          [&](const ScalarMix& s) {
            const std::vector<double> uniform(L, 0.0);
            const auto weights = detail::softmax(s.raw_weights.empty() ? std::span<const double>(uniform)
                                                                       : std::span<const double>(s.raw_weights));
            std::vector<long double> acc(d, 0.0L);
            for (std::size_t l = 0; l < L; ++l) {
              auto layer = stack.layer(l);
              for (std::size_t i = 0; i < d; ++i) acc[i] += weights[l] * layer[i];
            }
            Vector out(d);
            for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<double>(static_cast<long double>(s.gamma) * acc[i]);
            return out;
          },
          [&](const SingleLayer& s) {
            auto layer = stack.layer(detail::resolve_single(s, L));
            return Vector(layer.begin(), layer.end());
          },
      },
      scheme);
}

inline Vector pool_subtokens(std::span<const Vector> vectors, PoolingStrategy strategy) {
  if (vectors.empty()) throw ContractError("sub-token pooling needs at least one vector");
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw ContractError("sub-token vectors differ in dimension");
  }
  switch (strategy) {
    case PoolingStrategy::first:
      return vectors.front();
    case PoolingStrategy::last:
      return vectors.back();
    case PoolingStrategy::first_last: {
      Vector out = vectors.front();
      out.insert(out.end(), vectors.back().begin(), vectors.back().end());
      return out;
    }
    case PoolingStrategy::mean: {
      std::vector<long double> acc(d, 0.0L);
      for (const auto& v : vectors) {
        for (std::size_t i = 0; i < d; ++i) acc[i] += v[i];
      }
      Vector out(d);
      for (std::size_t i = 0; i < d; ++i) out[i] = static_cast<double>(acc[i] / static_cast<long double>(vectors.size()));
      return out;
    }
  }
  throw ContractError("unknown pooling strategy");
}

/// Vector of one part: scheme per sub-token, then pooling.
inline Vector part_vector(const embedstore::TargetEmbeddingRecord& record, const CombinationPart& part) {
  if (record.model_id != part.model_id) {
    throw ConfigError("record model '" + record.model_id + "' does not match config part model '" + part.model_id + "'");
  }
  std::vector<Vector> per_subtoken;
  per_subtoken.reserve(record.subtokens.size());
  for (const auto& st : record.subtokens) per_subtoken.push_back(combine_layers(st.stack, part.scheme));
  return pool_subtokens(per_subtoken, part.pooling);
}

/// Stacked word vector: part vectors concatenated in config order.
/// `records[i]` must be the record for `config.parts[i]`.
inline Vector word_vector(std::span<const embedstore::TargetEmbeddingRecord* const> records,
                          const CombinationConfig& config) {
  if (config.parts.empty()) throw ConfigError("combination config has no parts");
  if (records.size() != config.parts.size()) {
    throw ConfigError("got " + std::to_string(records.size()) + " records for " + std::to_string(config.parts.size()) +
                      " config parts");
  }
  Vector out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i] == nullptr) throw ContractError("null record for config part " + std::to_string(i));
    Vector v = part_vector(*records[i], config.parts[i]);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace cosim::combine

#pragma once

// Text form of combination configs, as used on the command line and in sweep
// files:
//
//   config  := part ( "+" part )*
//   part    := model [ "@" scheme [ "@" pooling ] ]
//   scheme  := "last" N | "avg:" K | "mix" [ ":g=" G ] [ ":w=" W ("," W)* ] | "layer:" I
//   pooling := "first" | "last" | "first-last" | "mean"
//
// Omitted scheme and pooling default to last4 and first.
//
//   bert-large-cased@avg:14@first + elmo@last4@mean

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "cosim/combine.hpp"
#include "cosim/error.hpp"

namespace cosim::combine {

namespace syntax_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto at = s.find(sep, pos);
    out.push_back(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos));
    if (at == std::string_view::npos) return out;
    pos = at + 1;
  }
}

template <class T>
T parse_num(std::string_view text, std::string_view what) {
  T value{};
  auto first = text.data();
  auto last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("bad number '" + std::string(text) + "' in " + std::string(what));
  }
  return value;
}

inline std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace syntax_detail

inline LayerScheme parse_scheme(std::string_view text) {
  using namespace syntax_detail;
  text = trim(text);
  if (text.starts_with("last") && text.size() > 4) {
    auto n = parse_num<long>(text.substr(4), "scheme '" + std::string(text) + "'");
    if (n < 1) throw ConfigError("concat_last needs n >= 1 in '" + std::string(text) + "'");
    return ConcatLast{static_cast<std::size_t>(n)};
  }
  if (text.starts_with("avg:")) {
    auto k = parse_num<long>(text.substr(4), "scheme '" + std::string(text) + "'");
    if (k < 1) throw ConfigError("average_last needs k >= 1 in '" + std::string(text) + "'");
    return AverageLast{static_cast<std::size_t>(k)};
  }
  if (text.starts_with("layer:")) {
    return SingleLayer{parse_num<long>(text.substr(6), "scheme '" + std::string(text) + "'")};
  }
  if (text == "mix" || text.starts_with("mix:")) {
    ScalarMix mix;
    auto fields = split(text, ':');
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto f = fields[i];
      if (f.starts_with("g=")) {
        mix.gamma = parse_num<double>(f.substr(2), "scalar mix gamma");
      } else if (f.starts_with("w=")) {
        for (auto w : split(f.substr(2), ',')) mix.raw_weights.push_back(parse_num<double>(trim(w), "scalar mix weights"));
      } else {
        throw ConfigError("unknown scalar mix option '" + std::string(f) + "' (expected g=G or w=W1,W2,...)");
      }
    }
    return mix;
  }
  throw ConfigError("unknown layer scheme '" + std::string(text) + "' (expected lastN, avg:K, mix[:g=G], layer:I)");
}

inline PoolingStrategy parse_pooling(std::string_view text) {
  text = syntax_detail::trim(text);
  if (text == "first") return PoolingStrategy::first;
  if (text == "last") return PoolingStrategy::last;
  if (text == "first-last") return PoolingStrategy::first_last;
  if (text == "mean") return PoolingStrategy::mean;
  throw ConfigError("unknown pooling '" + std::string(text) + "' (expected first, last, first-last or mean)");
}

inline CombinationConfig parse_config(std::string_view text) {
  using namespace syntax_detail;
  CombinationConfig config;
  if (trim(text).empty()) throw ConfigError("empty combination config");
  for (auto raw : split(text, '+')) {
    auto fields = split(trim(raw), '@');
    if (fields.size() > 3) throw ConfigError("config part '" + std::string(trim(raw)) + "' has too many '@' fields");
    CombinationPart part;
    part.model_id = std::string(trim(fields[0]));
    if (part.model_id.empty()) throw ConfigError("config part '" + std::string(trim(raw)) + "' has no model id");
    if (fields.size() >= 2) part.scheme = parse_scheme(fields[1]);
    if (fields.size() == 3) part.pooling = parse_pooling(fields[2]);
    config.parts.push_back(std::move(part));
  }
  return config;
}

inline std::string_view to_string(PoolingStrategy p) {
  switch (p) {
    case PoolingStrategy::first: return "first";
    case PoolingStrategy::last: return "last";
    case PoolingStrategy::first_last: return "first-last";
    case PoolingStrategy::mean: return "mean";
  }
  return "?";
}

inline std::string to_string(const LayerScheme& scheme) {
  using syntax_detail::num;
  return std::visit(detail::overloaded{
                        [](const ConcatLast& s) { return "last" + std::to_string(s.n); },
                        [](const AverageLast& s) { return "avg:" + std::to_string(s.k); },
                        [](const ScalarMix& s) {
                          std::string out = "mix";
                          if (s.gamma != 1.0) out += ":g=" + num(s.gamma);
                          if (!s.raw_weights.empty()) {
                            out += ":w=";
                            for (std::size_t i = 0; i < s.raw_weights.size(); ++i) {
                              if (i) out += ',';
                              out += num(s.raw_weights[i]);
                            }
                          }
                          return out;
                        },
                        [](const SingleLayer& s) { return "layer:" + std::to_string(s.index); },
                    },
                    scheme);
}

/// Canonical text form; parse_config(to_string(c)) == c.
inline std::string to_string(const CombinationConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < config.parts.size(); ++i) {
    const auto& p = config.parts[i];
    if (i) out += " + ";
    out += p.model_id + "@" + to_string(p.scheme) + "@" + std::string(to_string(p.pooling));
  }
  return out;
}

/// Human label in the "model(non-default settings)" style, stacked parts
/// joined by "+", e.g. "bert-large-cased(first-last,scalar-mix)".
inline std::string display_label(const CombinationConfig& config) {
  using syntax_detail::num;
  std::string out;
  for (std::size_t i = 0; i < config.parts.size(); ++i) {
    const auto& p = config.parts[i];
    std::vector<std::string> notes;
    if (p.pooling != PoolingStrategy::first) notes.emplace_back(to_string(p.pooling));
    std::visit(detail::overloaded{
                   [&](const ConcatLast& s) {
                     if (s.n != 4) notes.push_back("last=" + std::to_string(s.n));
                   },
                   [&](const AverageLast& s) { notes.push_back("k=" + std::to_string(s.k)); },
                   [&](const ScalarMix& s) {
                     notes.emplace_back("scalar-mix");
                     if (s.gamma != 1.0) notes.push_back("g=" + num(s.gamma));
                   },
                   [&](const SingleLayer& s) { notes.push_back("layer=" + std::to_string(s.index)); },
               },
               p.scheme);
    if (i) out += "+";
    out += p.model_id;
    if (!notes.empty()) {
      out += "(";
      for (std::size_t n = 0; n < notes.size(); ++n) out += (n ? "," : "") + notes[n];
      out += ")";
    }
  }
  return out;
}

}  // namespace cosim::combine

#pragma once

// Dataset of word pairs rated in two contexts: model, canonical TSV parser and
// writer, validation, and the entity-to-label text transform.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cosim/diagnostic.hpp"
#include "cosim/error.hpp"
#include "cosim/unicode.hpp"

namespace cosim::corpus {

enum class Language { en, hr, sl, fi };

inline std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::en: return "en";
    case Language::hr: return "hr";
    case Language::sl: return "sl";
    case Language::fi: return "fi";
  }
  return "?";
}

inline Language parse_language(std::string_view code) {
  if (code == "en") return Language::en;
  if (code == "hr") return Language::hr;
  if (code == "sl") return Language::sl;
  if (code == "fi") return Language::fi;
  throw ConfigError("unsupported language code '" + std::string(code) + "' (expected en, hr, sl or fi)");
}

/// Location of a target word: [start, end) in scalar values of the NFC
/// context, plus the exact covered text.
struct TargetSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const TargetSpan&, const TargetSpan&) = default;
};

/// Averaged human ratings. change is sim2 - sim1.
struct GoldScores {
  double sim1 = 0;
  double sim2 = 0;
  double change = 0;

  friend bool operator==(const GoldScores&, const GoldScores&) = default;
};

struct DatasetItem {
  std::string id;
  std::string word1;
  std::string word2;
  std::string context1;
  std::string context2;
  TargetSpan span_w1_c1;
  TargetSpan span_w2_c1;
  TargetSpan span_w1_c2;
  TargetSpan span_w2_c2;
  std::optional<GoldScores> gold;

  const std::string& word(int word_no) const { return word_no == 1 ? word1 : word2; }
  const std::string& context(int context_no) const { return context_no == 1 ? context1 : context2; }
  const TargetSpan& span(int word_no, int context_no) const {
    if (context_no == 1) return word_no == 1 ? span_w1_c1 : span_w2_c1;
    return word_no == 1 ? span_w1_c2 : span_w2_c2;
  }
  TargetSpan& span(int word_no, int context_no) {
    return const_cast<TargetSpan&>(std::as_const(*this).span(word_no, context_no));
  }

  friend bool operator==(const DatasetItem&, const DatasetItem&) = default;
};

struct Dataset {
  Language language = Language::en;
  std::vector<DatasetItem> items;

  bool has_gold() const {
    return !items.empty() && std::all_of(items.begin(), items.end(), [](const auto& it) { return it.gold.has_value(); });
  }
  const DatasetItem* find(std::string_view id) const {
    auto it = std::find_if(items.begin(), items.end(), [&](const auto& item) { return item.id == id; });
    return it == items.end() ? nullptr : &*it;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// A named entity inside one context; label is a lowercase word such as
/// "person", "org" or "loc".
struct EntityAnnotation {
  TargetSpan span;
  std::string label;
};

inline constexpr std::string_view kOpenMarker = "<strong>";
inline constexpr std::string_view kCloseMarker = "</strong>";

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      out.emplace_back(line.substr(pos));
      return out;
    }
    out.emplace_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
}

inline double parse_number(std::string_view text, std::string_view column, std::size_t line_no) {
  double value = 0;
  auto first = text.data();
  auto last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw FormatError("column " + std::string(column) + ": '" + std::string(text) + "' is not a decimal number",
                      line_no);
  }
  return value;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Marker {
  std::size_t start;
  std::size_t end;
  std::string surface;
};

struct StrippedContext {
  std::string text;
  std::vector<Marker> markers;
};

inline bool matches_at(const std::u32string& s, std::size_t pos, std::string_view ascii) {
  if (pos + ascii.size() > s.size()) return false;
  for (std::size_t k = 0; k < ascii.size(); ++k) {
    if (s[pos + k] != static_cast<char32_t>(ascii[k])) return false;
  }
  return true;
}

inline StrippedContext strip_markers(std::string_view raw, const std::string& where, std::size_t line_no) {
  const std::u32string in = unicode::to_u32(raw);
  std::u32string out;
  out.reserve(in.size());
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::optional<std::size_t> open;
  for (std::size_t i = 0; i < in.size();) {
    if (matches_at(in, i, kOpenMarker)) {
      if (open) throw FormatError(where + ": nested <strong> marker", line_no);
      open = out.size();
      i += kOpenMarker.size();
    } else if (matches_at(in, i, kCloseMarker)) {
      if (!open) throw FormatError(where + ": </strong> without matching <strong>", line_no);
      if (*open == out.size()) throw FormatError(where + ": empty <strong></strong> marker", line_no);
      ranges.emplace_back(*open, out.size());
      open.reset();
      i += kCloseMarker.size();
    } else {
      out.push_back(in[i++]);
    }
  }
  if (open) throw FormatError(where + ": unclosed <strong> marker", line_no);
  StrippedContext result;
  result.text = unicode::to_utf8(out);
  for (auto [s, e] : ranges) {
    result.markers.push_back({s, e, unicode::to_utf8(std::u32string_view(out).substr(s, e - s))});
  }
  return result;
}

// Assigns exactly one marker to each word. Exact case-insensitive matches win;
// an unmatched marker may still belong to a word it starts with ("cells" for
// "cell") when that is the only candidate.
inline std::pair<TargetSpan, TargetSpan> assign_markers(const std::vector<Marker>& markers, const std::string& word1,
                                                        const std::string& word2, const std::string& item_id,
                                                        int context_no) {
  const std::string where = "item '" + item_id + "' context" + std::to_string(context_no);
  const std::string words[2] = {word1, word2};
  auto to_span = [](const Marker& m) { return TargetSpan{m.start, m.end, m.surface}; };

  if (unicode::equal_ignore_case(word1, word2)) {
    for (const auto& m : markers) {
      if (!unicode::equal_ignore_case(m.surface, word1)) {
        throw MismatchError(where + ": marked '" + m.surface + "' does not match word '" + word1 + "'");
      }
    }
    if (markers.size() != 2) {
      throw AmbiguityError(where + ": word '" + word1 + "' must be marked exactly twice when both words coincide, found " +
                           std::to_string(markers.size()));
    }
    return {to_span(markers[0]), to_span(markers[1])};
  }

  std::vector<int> owner(markers.size(), -1);
  std::vector<std::size_t> exact[2];
  for (std::size_t m = 0; m < markers.size(); ++m) {
    for (int w = 0; w < 2; ++w) {
      if (unicode::equal_ignore_case(markers[m].surface, words[w])) {
        exact[w].push_back(m);
        owner[m] = w;
      }
    }
  }
  std::optional<std::size_t> chosen[2];
  for (int w = 0; w < 2; ++w) {
    if (exact[w].size() > 1) {
      throw AmbiguityError(where + ": word" + std::to_string(w + 1) + " '" + words[w] + "' is marked " +
                           std::to_string(exact[w].size()) + " times");
    }
    if (exact[w].size() == 1) chosen[w] = exact[w][0];
  }
  for (int w = 0; w < 2; ++w) {
    if (chosen[w]) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t m = 0; m < markers.size(); ++m) {
      if (owner[m] == -1 && unicode::starts_with_ignore_case(markers[m].surface, words[w])) candidates.push_back(m);
    }
    if (candidates.size() > 1) {
      throw AmbiguityError(where + ": word" + std::to_string(w + 1) + " '" + words[w] + "' is marked " +
                           std::to_string(candidates.size()) + " times");
    }
    if (candidates.size() == 1) {
      chosen[w] = candidates[0];
      owner[candidates[0]] = w;
    }
  }
  for (std::size_t m = 0; m < markers.size(); ++m) {
    if (owner[m] != -1) continue;
    for (int w = 0; w < 2; ++w) {
      if (unicode::starts_with_ignore_case(markers[m].surface, words[w])) {
        throw AmbiguityError(where + ": word" + std::to_string(w + 1) + " '" + words[w] +
                             "' is marked more than once");
      }
    }
    throw MismatchError(where + ": marked '" + markers[m].surface + "' matches neither '" + word1 + "' nor '" +
                        word2 + "'");
  }
  for (int w = 0; w < 2; ++w) {
    if (!chosen[w]) {
      throw AmbiguityError(where + ": word" + std::to_string(w + 1) + " '" + words[w] + "' is not marked");
    }
  }
  return {to_span(markers[*chosen[0]]), to_span(markers[*chosen[1]])};
}

inline std::string insert_markers(const std::string& context, const TargetSpan& a, const TargetSpan& b) {
  std::u32string text = unicode::to_u32(context);
  const std::u32string open = unicode::to_u32(kOpenMarker);
  const std::u32string close = unicode::to_u32(kCloseMarker);
  const TargetSpan& later = a.start > b.start ? a : b;
  const TargetSpan& earlier = a.start > b.start ? b : a;
  for (const TargetSpan* s : {&later, &earlier}) {
    if (s->end > text.size() || s->start >= s->end) throw ContractError("span out of context bounds");
    text.insert(s->end, close);
    text.insert(s->start, open);
  }
  return unicode::to_utf8(text);
}

inline bool overlaps(const TargetSpan& a, const TargetSpan& b) { return a.start < b.end && b.start < a.end; }

}  // namespace detail

inline const std::vector<std::string>& base_columns() {
  static const std::vector<std::string> cols{"id", "word1", "word2", "context1", "context2"};
  return cols;
}

inline const std::vector<std::string>& gold_columns() {
  static const std::vector<std::string> cols{"sim1", "sim2", "change"};
  return cols;
}

/// Parses the canonical tab-separated dataset. Contexts are NFC-normalized,
/// <strong> markers are stripped and turned into spans.
inline Dataset parse_dataset(std::istream& in, Language language) {
  Dataset ds;
  ds.language = language;
  std::string line;
  std::size_t line_no = 0;
  bool with_gold = false;
  bool have_header = false;
  std::unordered_set<std::string> seen;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      auto cols = detail::split_tabs(line);
      std::vector<std::string> expected = base_columns();
      if (cols.size() == expected.size() + gold_columns().size()) {
        with_gold = true;
        expected.insert(expected.end(), gold_columns().begin(), gold_columns().end());
      }
      if (cols != expected) {
        throw FormatError("header must be 'id\\tword1\\tword2\\tcontext1\\tcontext2' optionally followed by "
                          "'\\tsim1\\tsim2\\tchange'",
                          line_no);
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string> cols = detail::split_tabs(line);
    const std::size_t want = base_columns().size() + (with_gold ? gold_columns().size() : 0);
    if (cols.size() != want) {
      throw FormatError("expected " + std::to_string(want) + " tab-separated columns, found " +
                            std::to_string(cols.size()),
                        line_no);
    }
    for (std::size_t c = 0; c < 5; ++c) cols[c] = unicode::nfc(cols[c]);

    DatasetItem item;
    item.id = cols[0];
    if (item.id.empty()) throw FormatError("missing id", line_no);
    if (!seen.insert(item.id).second) throw FormatError("duplicate id '" + item.id + "'", line_no);
    item.word1 = cols[1];
    item.word2 = cols[2];
    if (item.word1.empty() || item.word2.empty()) {
      throw FormatError("item '" + item.id + "': empty target word", line_no);
    }
    for (int c = 1; c <= 2; ++c) {
      auto stripped = detail::strip_markers(cols[2 + c], "item '" + item.id + "' context" + std::to_string(c), line_no);
      auto [s1, s2] = detail::assign_markers(stripped.markers, item.word1, item.word2, item.id, c);
      (c == 1 ? item.context1 : item.context2) = std::move(stripped.text);
      item.span(1, c) = std::move(s1);
      item.span(2, c) = std::move(s2);
    }
    if (with_gold) {
      GoldScores g;
      g.sim1 = detail::parse_number(cols[5], "sim1", line_no);
      g.sim2 = detail::parse_number(cols[6], "sim2", line_no);
      g.change = detail::parse_number(cols[7], "change", line_no);
      item.gold = g;
    }
    ds.items.push_back(std::move(item));
  }
  if (!have_header) throw FormatError("missing header line");
  return ds;
}

inline Dataset parse_dataset(std::string_view content, Language language) {
  std::istringstream in{std::string(content)};
  return parse_dataset(in, language);
}

/// Writes the canonical layout. Gold columns are emitted when every item has
/// gold scores; a mix of scored and unscored items is a contract error.
inline void serialize_dataset(const Dataset& ds, std::ostream& out) {
  const bool any_gold = std::any_of(ds.items.begin(), ds.items.end(), [](const auto& i) { return i.gold.has_value(); });
  if (any_gold && !ds.has_gold()) throw ContractError("gold scores must be present for all items or none");
  out << "id\tword1\tword2\tcontext1\tcontext2";
  if (any_gold) out << "\tsim1\tsim2\tchange";
  out << '\n';
  for (const auto& item : ds.items) {
    out << item.id << '\t' << item.word1 << '\t' << item.word2 << '\t'
        << detail::insert_markers(item.context1, item.span_w1_c1, item.span_w2_c1) << '\t'
        << detail::insert_markers(item.context2, item.span_w1_c2, item.span_w2_c2);
    if (any_gold) {
      out << '\t' << detail::format_number(item.gold->sim1) << '\t' << detail::format_number(item.gold->sim2) << '\t'
          << detail::format_number(item.gold->change);
    }
    out << '\n';
  }
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  serialize_dataset(ds, out);
  return out.str();
}

/// Admissible gold ranges; the upstream task rates on a 0-10 scale.
struct GoldBounds {
  double sim_min = 0.0;
  double sim_max = 10.0;
  double change_min = -10.0;
  double change_max = 10.0;
  double change_tolerance = 1e-9;
};

inline Diagnostics validate_dataset(const Dataset& ds, const GoldBounds& bounds = {}) {
  Diagnostics out;
  std::unordered_set<std::string> seen;
  for (const auto& item : ds.items) {
    const std::string subject = item.id.empty() ? std::string("<missing id>") : item.id;
    if (item.id.empty()) out.push_back({subject, "id", "id is empty"});
    if (!item.id.empty() && !seen.insert(item.id).second) out.push_back({subject, "id", "duplicate id"});

    for (int c = 1; c <= 2; ++c) {
      const std::size_t len = unicode::length(item.context(c));
      bool in_range = true;
      for (int w = 1; w <= 2; ++w) {
        const TargetSpan& s = item.span(w, c);
        const std::string field = "span_w" + std::to_string(w) + "_c" + std::to_string(c);
        if (!(s.start < s.end && s.end <= len)) {
          in_range = false;
          out.push_back({subject, field,
                         "range [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                             ") outside context of length " + std::to_string(len)});
        } else if (unicode::substr(item.context(c), s.start, s.end) != s.surface) {
          out.push_back({subject, field, "surface '" + s.surface + "' differs from context substring '" +
                                             unicode::substr(item.context(c), s.start, s.end) + "'"});
        }
      }
      if (in_range && detail::overlaps(item.span(1, c), item.span(2, c))) {
        out.push_back({subject, "context" + std::to_string(c), "target spans overlap"});
      }
    }

    if (item.gold) {
      const GoldScores& g = *item.gold;
      auto check = [&](double v, double lo, double hi, const char* field) {
        if (!std::isfinite(v) || v < lo || v > hi) {
          out.push_back({subject, std::string("gold.") + field,
                         detail::format_number(v) + " outside [" + detail::format_number(lo) + ", " +
                             detail::format_number(hi) + "]"});
        }
      };
      check(g.sim1, bounds.sim_min, bounds.sim_max, "sim1");
      check(g.sim2, bounds.sim_min, bounds.sim_max, "sim2");
      check(g.change, bounds.change_min, bounds.change_max, "change");
      if (std::abs(g.change - (g.sim2 - g.sim1)) > bounds.change_tolerance) {
        out.push_back({subject, "gold.change",
                       "change " + detail::format_number(g.change) + " != sim2 - sim1 = " +
                           detail::format_number(g.sim2 - g.sim1)});
      }
    }
  }
  const bool any_gold = std::any_of(ds.items.begin(), ds.items.end(), [](const auto& i) { return i.gold.has_value(); });
  if (any_gold && !ds.has_gold()) out.push_back({"dataset", "gold", "gold scores present for some items only"});
  return out;
}

struct EntityReplacement {
  std::string context;
  std::vector<TargetSpan> targets;
  /// Entities left in place because they overlap a target word.
  std::vector<EntityAnnotation> skipped;
};

/// Replaces each entity's text by its label and shifts the target spans by
/// the cumulative length change of earlier replacements.
inline EntityReplacement apply_entity_replacement(std::string_view context, std::span<const TargetSpan> targets,
                                                  std::span<const EntityAnnotation> entities) {
  const std::u32string text = unicode::to_u32(context);
  for (const auto& e : entities) {
    if (e.label.empty() || unicode::has_whitespace(e.label) || !unicode::is_lowercase(e.label)) {
      throw ValidationError("entity label '" + e.label + "' must be a non-empty lowercase word");
    }
    if (!(e.span.start < e.span.end && e.span.end <= text.size())) {
      throw ValidationError("entity span [" + std::to_string(e.span.start) + "," + std::to_string(e.span.end) +
                            ") outside context");
    }
    if (unicode::to_utf8(std::u32string_view(text).substr(e.span.start, e.span.end - e.span.start)) != e.span.surface) {
      throw ValidationError("entity surface '" + e.span.surface + "' does not match the context");
    }
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    for (std::size_t j = i + 1; j < entities.size(); ++j) {
      if (detail::overlaps(entities[i].span, entities[j].span)) {
        throw ValidationError("entity spans '" + entities[i].span.surface + "' and '" + entities[j].span.surface +
                              "' overlap");
      }
    }
  }
  for (const auto& t : targets) {
    if (!(t.start < t.end && t.end <= text.size())) throw ContractError("target span outside context");
  }

  EntityReplacement result;
  std::vector<const EntityAnnotation*> applied;
  for (const auto& e : entities) {
    bool hits_target = std::any_of(targets.begin(), targets.end(),
                                   [&](const TargetSpan& t) { return detail::overlaps(t, e.span); });
    if (hits_target) {
      result.skipped.push_back(e);
    } else {
      applied.push_back(&e);
    }
  }
  std::sort(applied.begin(), applied.end(), [](auto* a, auto* b) { return a->span.start < b->span.start; });

  std::u32string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  // Signed shift as a function of original offset, sampled at each replacement.
  std::vector<std::pair<std::size_t, long long>> shifts;
  long long delta = 0;
  for (const auto* e : applied) {
    out.append(text, cursor, e->span.start - cursor);
    const std::u32string label = unicode::to_u32(e->label);
    out.append(label);
    delta += static_cast<long long>(label.size()) - static_cast<long long>(e->span.end - e->span.start);
    shifts.emplace_back(e->span.end, delta);
    cursor = e->span.end;
  }
  out.append(text, cursor, std::u32string::npos);
  result.context = unicode::to_utf8(out);

  for (const auto& t : targets) {
    long long shift = 0;
    for (auto [end, d] : shifts) {
      if (end <= t.start) shift = d;
    }
    TargetSpan moved = t;
    moved.start = static_cast<std::size_t>(static_cast<long long>(t.start) + shift);
    moved.end = static_cast<std::size_t>(static_cast<long long>(t.end) + shift);
    result.targets.push_back(std::move(moved));
  }
  return result;
}

}  // namespace cosim::corpus

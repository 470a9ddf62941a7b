#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "cosim/corpus.hpp"

namespace {

using namespace cosim;
using namespace cosim::corpus;

const std::string kHeader = "id\tword1\tword2\tcontext1\tcontext2\n";
const std::string kGoldHeader = "id\tword1\tword2\tcontext1\tcontext2\tsim1\tsim2\tchange\n";

const std::string kCellRoomRow =
    "1\tcell\troom\tHer prison <strong>cell</strong> was almost an improvement over her <strong>room</strong> at the "
    "last hostel.\tHis job as a biologist didn't leave much <strong>room</strong> for a personal life. He knew much "
    "more about human <strong>cells</strong> than about human feelings.\n";

std::string strip_all_markers(std::string s) {
  for (std::string_view m : {kOpenMarker, kCloseMarker}) {
    for (auto pos = s.find(m); pos != std::string::npos; pos = s.find(m)) s.erase(pos, m.size());
  }
  return s;
}

TEST(ParseDataset, StripsMarkersAndLocatesTargets) {
  const Dataset ds = parse_dataset(kHeader + kCellRoomRow, Language::en);
  ASSERT_EQ(ds.items.size(), 1u);
  const DatasetItem& item = ds.items[0];
  EXPECT_EQ(item.context1, "Her prison cell was almost an improvement over her room at the last hostel.");
  EXPECT_EQ(item.span_w1_c1, (TargetSpan{11, 15, "cell"}));
  EXPECT_EQ(item.span_w2_c1.surface, "room");
  EXPECT_EQ(item.context1.find("<strong>"), std::string::npos);
  EXPECT_EQ(item.context2.find("strong>"), std::string::npos);
  EXPECT_FALSE(item.gold.has_value());
  EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(ParseDataset, InflectedMarkerIsAssignedToItsWord) {
  const Dataset ds = parse_dataset(kHeader + kCellRoomRow, Language::en);
  const DatasetItem& item = ds.items[0];
  EXPECT_EQ(item.span_w1_c2.surface, "cells");
  EXPECT_EQ(item.span_w2_c2.surface, "room");
  EXPECT_LT(item.span_w2_c2.start, item.span_w1_c2.start);
}

TEST(ParseDataset, EmptyItemListIsValid) {
  EXPECT_TRUE(parse_dataset(kHeader, Language::hr).items.empty());
  EXPECT_TRUE(parse_dataset(kGoldHeader + "\n", Language::fi).items.empty());
}

TEST(ParseDataset, MissingHeaderIsFormatError) {
  EXPECT_THROW(parse_dataset("", Language::en), FormatError);
  EXPECT_THROW(parse_dataset("id\tword1\tword2\n", Language::en), FormatError);
  // gold columns are all-or-nothing
  EXPECT_THROW(parse_dataset("id\tword1\tword2\tcontext1\tcontext2\tsim1\n", Language::en), FormatError);
}

TEST(ParseDataset, DoubleMarkedWordIsAmbiguous) {
  const std::string row =
      "x\tcell\troom\tA <strong>cell</strong> and another <strong>cell</strong> near the <strong>room</strong>."
      "\tThe <strong>cell</strong> and the <strong>room</strong>.\n";
  try {
    parse_dataset(kHeader + row, Language::en);
    FAIL() << "expected AmbiguityError";
  } catch (const AmbiguityError& e) {
    EXPECT_NE(std::string(e.what()).find("item 'x'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("cell"), std::string::npos);
  }
}

TEST(ParseDataset, UnmarkedWordIsAmbiguous) {
  const std::string row = "x\tcell\troom\tA <strong>cell</strong> near the room.\tThe <strong>cell</strong> and the "
                          "<strong>room</strong>.\n";
  EXPECT_THROW(parse_dataset(kHeader + row, Language::en), AmbiguityError);
}

TEST(ParseDataset, MarkedSurfaceMustMatchWord) {
  const std::string row = "x\tcell\troom\tA <strong>prison</strong> near the <strong>room</strong>.\tThe "
                          "<strong>cell</strong> and the <strong>room</strong>.\n";
  EXPECT_THROW(parse_dataset(kHeader + row, Language::en), MismatchError);
}

TEST(ParseDataset, MatchingIgnoresCase) {
  const std::string row = "x\tcell\troom\t<strong>Cell</strong> and <strong>ROOM</strong>.\t<strong>cell</strong> "
                          "and <strong>room</strong>.\n";
  const auto ds = parse_dataset(kHeader + row, Language::en);
  EXPECT_EQ(ds.items[0].span_w1_c1.surface, "Cell");
  EXPECT_EQ(ds.items[0].span_w2_c1.surface, "ROOM");
}

TEST(ParseDataset, MalformedMarkersAreFormatErrors) {
  auto row = [](const std::string& c1) {
    return kHeader + "x\tcell\troom\t" + c1 + "\t<strong>cell</strong> <strong>room</strong>\n";
  };
  EXPECT_THROW(parse_dataset(row("<strong>cell <strong>room</strong>"), Language::en), FormatError);
  EXPECT_THROW(parse_dataset(row("cell</strong> <strong>room</strong>"), Language::en), FormatError);
  EXPECT_THROW(parse_dataset(row("<strong>cell</strong> <strong>room"), Language::en), FormatError);
}

TEST(ParseDataset, IdErrorsNameTheLine) {
  const std::string ok = "a\tcell\troom\t<strong>cell</strong> <strong>room</strong>\t<strong>cell</strong> "
                         "<strong>room</strong>\n";
  try {
    parse_dataset(kHeader + ok + ok, Language::en);
    FAIL() << "expected duplicate id error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("duplicate id"), std::string::npos);
  }
  try {
    parse_dataset(kHeader + ok.substr(1), Language::en);
    FAIL() << "expected missing id error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseDataset, ColumnCountAndNumbersAreChecked) {
  const std::string base = "a\tcell\troom\t<strong>cell</strong> <strong>room</strong>\t<strong>cell</strong> "
                           "<strong>room</strong>";
  EXPECT_THROW(parse_dataset(kHeader + base + "\t1\n", Language::en), FormatError);
  EXPECT_THROW(parse_dataset(kGoldHeader + base + "\t1\t2,5\t1.5\n", Language::en), FormatError);
  EXPECT_THROW(parse_dataset(kGoldHeader + base + "\t1\t\t1\n", Language::en), FormatError);
  const auto ds = parse_dataset(kGoldHeader + base + "\t1.25\t3\t1.75\n", Language::en);
  ASSERT_TRUE(ds.items[0].gold.has_value());
  EXPECT_EQ(*ds.items[0].gold, (GoldScores{1.25, 3.0, 1.75}));
}

TEST(ParseDataset, OffsetsCountScalarValuesOfNfcText) {
  // "Čaša" spelled with a combining caron: C + U+030C.
  const std::string decomposed = "C\xCC\x8C" "a\xC5\xA1" "a";
  const std::string row = "n\tkuća\tčaša\tVelika <strong>kuća</strong> i <strong>" + decomposed +
                          "</strong>.\t<strong>čaša</strong> pored <strong>kućama</strong>.\n";
  const auto ds = parse_dataset(kHeader + row, Language::hr);
  const auto& item = ds.items[0];
  EXPECT_EQ(item.span_w1_c1, (TargetSpan{7, 11, "kuća"}));
  // "Velika kuća i " is 14 scalar values; the NFC surface has 4.
  EXPECT_EQ(item.span_w2_c1.start, 14u);
  EXPECT_EQ(item.span_w2_c1.end, 18u);
  EXPECT_EQ(item.span_w2_c1.surface, "Čaša");
  EXPECT_EQ(item.span_w1_c2.surface, "kućama");
  EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(ParseDataset, StrippingLeavesOtherCharactersAlone) {
  std::istringstream in(kHeader + kCellRoomRow);
  std::string header, raw;
  std::getline(in, header);
  std::getline(in, raw);
  const auto cols = detail::split_tabs(raw);
  const auto ds = parse_dataset(kHeader + kCellRoomRow, Language::en);
  EXPECT_EQ(strip_all_markers(cols[3]), ds.items[0].context1);
  EXPECT_EQ(strip_all_markers(cols[4]), ds.items[0].context2);
}

TEST(ParseDataset, LanguageCodes) {
  EXPECT_EQ(parse_language("sl"), Language::sl);
  EXPECT_EQ(to_string(Language::fi), "fi");
  EXPECT_THROW(parse_language("de"), ConfigError);
}

// Random datasets over a small vocabulary with diacritics.
Dataset random_dataset(std::mt19937& rng, bool gold) {
  static const std::vector<std::string> vocab{"cell", "room", "kuća", "čaša", "pöytä", "miza", "bank", "shore",
                                              "the",  "a",    "in",   "je",   "ja",    "of",   "near", "ŽELJA"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(0, 6);
  std::uniform_real_distribution<double> score(0, 10);
  Dataset ds;
  ds.language = Language::hr;
  const int n = std::uniform_int_distribution<int>(0, 6)(rng);
  for (int i = 0; i < n; ++i) {
    DatasetItem item;
    item.id = "it" + std::to_string(i);
    item.word1 = "meta";
    item.word2 = "Ćup";
    for (int c = 1; c <= 2; ++c) {
      std::vector<std::string> tokens;
      for (int k = len(rng); k > 0; --k) tokens.push_back(vocab[pick(rng)]);
      std::size_t at1 = std::uniform_int_distribution<std::size_t>(0, tokens.size())(rng);
      tokens.insert(tokens.begin() + static_cast<long>(at1), "\x01");
      std::size_t at2 = std::uniform_int_distribution<std::size_t>(0, tokens.size())(rng);
      tokens.insert(tokens.begin() + static_cast<long>(at2), "\x02");
      std::string text;
      std::size_t pos = 0;
      TargetSpan s1, s2;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t) {
          text += ' ';
          ++pos;
        }
        if (tokens[t] == "\x01" || tokens[t] == "\x02") {
          const std::string& w = tokens[t] == "\x01" ? item.word1 : item.word2;
          TargetSpan& s = tokens[t] == "\x01" ? s1 : s2;
          s = {pos, pos + unicode::length(w), w};
          text += w;
          pos += unicode::length(w);
        } else {
          text += tokens[t];
          pos += unicode::length(tokens[t]);
        }
      }
      (c == 1 ? item.context1 : item.context2) = text;
      item.span(1, c) = s1;
      item.span(2, c) = s2;
    }
    if (gold) {
      GoldScores g{score(rng), score(rng), 0};
      g.change = g.sim2 - g.sim1;
      item.gold = g;
    }
    ds.items.push_back(std::move(item));
  }
  return ds;
}

TEST(ParseDataset, SerializeRoundTripProperty) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ds = random_dataset(rng, trial % 2 == 0);
    ASSERT_TRUE(validate_dataset(ds).empty());
    const Dataset once = parse_dataset(serialize_dataset(ds), ds.language);
    EXPECT_EQ(once, ds);
    EXPECT_EQ(parse_dataset(serialize_dataset(once), ds.language), once);
  }
}

TEST(ParseDataset, FixtureFileRoundTrips) {
  std::ifstream in(std::string(COSIM_TEST_DATA_DIR) + "/fixture.tsv");
  ASSERT_TRUE(in);
  const Dataset ds = parse_dataset(in, Language::en);
  EXPECT_EQ(ds.items.size(), 4u);
  EXPECT_TRUE(ds.has_gold());
  EXPECT_TRUE(validate_dataset(ds).empty());
  EXPECT_EQ(parse_dataset(serialize_dataset(ds), Language::en), ds);
}

Dataset two_items() {
  const std::string rows =
      "a\tcell\troom\t<strong>cell</strong> <strong>room</strong>\t<strong>room</strong> <strong>cell</strong>\t5\t6\t1\n"
      "b\tbank\tshore\tThe <strong>bank</strong> by the <strong>shore</strong>\t<strong>Bank</strong> <strong>shore</strong>\t2\t1\t-1\n";
  return parse_dataset(kGoldHeader + rows, Language::en);
}

TEST(ValidateDataset, WellFormedHasNoDiagnostics) { EXPECT_TRUE(validate_dataset(two_items()).empty()); }

TEST(ValidateDataset, SurfaceMismatchIsOneDiagnostic) {
  Dataset ds = two_items();
  ds.items[1].span_w2_c1.surface = "shire";
  const auto diags = validate_dataset(ds);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].subject, "b");
  EXPECT_EQ(diags[0].field, "span_w2_c1");
}

TEST(ValidateDataset, InconsistentChangeIsOneDiagnostic) {
  Dataset ds = two_items();
  ds.items[0].gold->change = 2.0;
  const auto diags = validate_dataset(ds);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].field, "gold.change");
}

TEST(ValidateDataset, RangeOverlapAndBounds) {
  Dataset ds = two_items();
  ds.items[0].span_w1_c1.end = 1000;
  ds.items[1].span_w2_c2 = ds.items[1].span_w1_c2;
  ds.items[1].span_w2_c2.surface = ds.items[1].span_w1_c2.surface;
  ds.items[1].gold = GoldScores{11, 12, 1};
  const auto diags = validate_dataset(ds);
  // out-of-range span; overlap in context2; sim1 and sim2 above 10
  EXPECT_EQ(diags.size(), 4u);
  GoldBounds wide;
  wide.sim_max = 100;
  EXPECT_EQ(validate_dataset(ds, wide).size(), 2u);
}

TEST(EntityReplacement, ReplacesEntityWithLabel) {
  const std::string ctx = "...underground in the late 1960s, Sihanouk had to make concessions...";
  const std::vector<TargetSpan> targets{{55, 66, "concessions"}};
  const std::vector<EntityAnnotation> ents{{{34, 42, "Sihanouk"}, "person"}};
  const auto r = apply_entity_replacement(ctx, targets, ents);
  EXPECT_EQ(r.context, "...underground in the late 1960s, person had to make concessions...");
  ASSERT_EQ(r.targets.size(), 1u);
  EXPECT_EQ(r.targets[0], (TargetSpan{53, 64, "concessions"}));
  EXPECT_TRUE(r.skipped.empty());
}

TEST(EntityReplacement, NoEntitiesIsIdentity) {
  const std::string ctx = "Her prison cell was almost an improvement over her room.";
  const std::vector<TargetSpan> targets{{11, 15, "cell"}, {51, 55, "room"}};
  const auto r = apply_entity_replacement(ctx, targets, {});
  EXPECT_EQ(r.context, ctx);
  EXPECT_EQ(r.targets, targets);
}

TEST(EntityReplacement, ShiftsLaterTargetsByLengthDelta) {
  const std::string ctx = "Visitors to New York often admired the tiny stone cell.";
  const std::vector<TargetSpan> targets{{50, 54, "cell"}};
  const std::vector<EntityAnnotation> ents{{{12, 20, "New York"}, "loc"}};
  const auto r = apply_entity_replacement(ctx, targets, ents);
  EXPECT_EQ(r.context, "Visitors to loc often admired the tiny stone cell.");
  EXPECT_EQ(r.targets[0].start, 45u);
  EXPECT_EQ(unicode::substr(r.context, r.targets[0].start, r.targets[0].end), "cell");
}

TEST(EntityReplacement, EntityOverlappingTargetIsSkipped) {
  const std::string ctx = "Paris Hilton met Sihanouk.";
  const std::vector<TargetSpan> targets{{0, 5, "Paris"}};
  const std::vector<EntityAnnotation> ents{{{0, 12, "Paris Hilton"}, "person"}, {{17, 25, "Sihanouk"}, "person"}};
  const auto r = apply_entity_replacement(ctx, targets, ents);
  EXPECT_EQ(r.context, "Paris Hilton met person.");
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].span.surface, "Paris Hilton");
  EXPECT_EQ(r.targets, targets);
}

TEST(EntityReplacement, RejectsOverlappingEntitiesAndBadLabels) {
  const std::string ctx = "New York City is big.";
  EXPECT_THROW(apply_entity_replacement(ctx, {}, std::vector<EntityAnnotation>{{{0, 8, "New York"}, "loc"},
                                                                              {{4, 13, "York City"}, "loc"}}),
               ValidationError);
  EXPECT_THROW(apply_entity_replacement(ctx, {}, std::vector<EntityAnnotation>{{{0, 8, "New York"}, "Loc"}}),
               ValidationError);
  EXPECT_THROW(apply_entity_replacement(ctx, {}, std::vector<EntityAnnotation>{{{0, 8, "New York"}, "a loc"}}),
               ValidationError);
  EXPECT_THROW(apply_entity_replacement(ctx, {}, std::vector<EntityAnnotation>{{{0, 8, "New Yolk"}, "loc"}}),
               ValidationError);
}

TEST(EntityReplacement, TargetsSurviveRandomReplacements) {
  std::mt19937 rng(11);
  const std::vector<std::string> names{"Sihanouk", "Zagreb", "Ljubljana", "Helsinki", "Öljy Oy", "IBM"};
  const std::vector<std::string> labels{"person", "loc", "org", "gpe"};
  for (int trial = 0; trial < 300; ++trial) {
    // Alternate names and targets so nothing overlaps by construction.
    std::string text;
    std::size_t pos = 0;
    std::vector<TargetSpan> targets;
    std::vector<EntityAnnotation> ents;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int k = 0; k < n; ++k) {
      const bool is_target = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      const std::string w = is_target ? (k % 2 ? "cell" : "soba") : names[rng() % names.size()];
      const std::size_t len = unicode::length(w);
      if (is_target) {
        targets.push_back({pos, pos + len, w});
      } else {
        ents.push_back({{pos, pos + len, w}, labels[rng() % labels.size()]});
      }
      text += w + " and ";
      pos += len + 5;
    }
    const auto r = apply_entity_replacement(text, targets, ents);
    ASSERT_EQ(r.targets.size(), targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      EXPECT_EQ(unicode::substr(r.context, r.targets[i].start, r.targets[i].end), targets[i].surface);
    }
  }
}

}  // namespace

#include <gtest/gtest.h>

#include <random>

#include "cosim/similarity.hpp"
#include "oracles.hpp"

namespace {

using namespace cosim;
using namespace cosim::similarity;
using embedstore::EmbeddingStore;
using embedstore::LayerStack;

TEST(Cosine, Basics) {
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{1, 0}), 1.0);
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(cosine(std::vector<double>{1, 1}, std::vector<double>{1, 0}), 0.7071067812, 1e-9);
}

TEST(Cosine, Errors) {
  try {
    cosine(std::vector<double>{0, 0}, std::vector<double>{1, 0});
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("first"), std::string::npos);
  }
  try {
    cosine(std::vector<double>{1, 0}, std::vector<double>{0, 0});
    FAIL();
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
  }
  EXPECT_THROW(cosine(std::vector<double>{1}, std::vector<double>{1, 0}), ContractError);
}

TEST(Cosine, StaysInRangeAndMatchesOracle) {
  std::mt19937 rng(1);
  std::normal_distribution<double> val(0, 1);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + rng() % 50), w(v.size());
    for (auto& x : v) x = val(rng);
    for (auto& x : w) x = val(rng);
    const double c = cosine(v, w);
    EXPECT_LE(std::abs(c), 1.0);
    EXPECT_NEAR(c, static_cast<double>(oracle::cosine(v, w)), 1e-12);
    EXPECT_EQ(cosine(v, v), 1.0);
  }
}

// One model "m", single layer, single sub-token per slot.
struct Fixture {
  corpus::DatasetItem item;
  EmbeddingStore store;

  Fixture(std::vector<double> c1w1, std::vector<double> c1w2, std::vector<double> c2w1, std::vector<double> c2w2) {
    item.id = "x";
    const std::vector<double>* vecs[2][2] = {{&c1w1, &c1w2}, {&c2w1, &c2w2}};
    for (int c = 1; c <= 2; ++c) {
      for (int w = 1; w <= 2; ++w) {
        store.insert({"x", c, w, "m", {{"t", LayerStack::from_layers({*vecs[c - 1][w - 1]})}}});
      }
    }
  }
};

const combine::CombinationConfig kLast{{{"m", combine::SingleLayer{-1}, combine::PoolingStrategy::first}}};

TEST(PredictItem, IdenticalVectors) {
  Fixture f({1, 2}, {1, 2}, {3, 1}, {3, 1});
  const auto p = predict_item(f.item, f.store, kLast);
  EXPECT_DOUBLE_EQ(p.sim1, 1.0);
  EXPECT_DOUBLE_EQ(p.sim2, 1.0);
  EXPECT_DOUBLE_EQ(p.change, 0.0);
}

TEST(PredictItem, OrthogonalSecondContext) {
  Fixture f({1, 0}, {1, 0}, {1, 0}, {0, 1});
  const auto p = predict_item(f.item, f.store, kLast);
  EXPECT_EQ(p.item_id, "x");
  EXPECT_EQ(p.sim1, 1.0);
  EXPECT_EQ(p.sim2, 0.0);
  EXPECT_EQ(p.change, -1.0);
}

TEST(PredictItem, HandComputedCosines) {
  // [2,1].[1,2] = 4 over 5 -> 0.8; [3,0].[1,1] = 3 over 3*sqrt2 -> 0.7071068
  Fixture f({2, 1}, {1, 2}, {3, 0}, {1, 1});
  const auto p = predict_item(f.item, f.store, kLast);
  EXPECT_NEAR(p.sim1, 0.8, 1e-6);
  EXPECT_NEAR(p.sim2, 0.7071068, 1e-6);
  EXPECT_NEAR(p.change, -0.0928932, 1e-6);
  EXPECT_NEAR(p.change, p.sim2 - p.sim1, 1e-12);
}

TEST(PredictItem, MissingRecordNamesKey) {
  Fixture f({2, 1}, {1, 2}, {3, 0}, {1, 1});
  const combine::CombinationConfig other{{{"n", combine::SingleLayer{-1}, combine::PoolingStrategy::first}}};
  try {
    predict_item(f.item, f.store, other);
    FAIL();
  } catch (const embedstore::NotFoundError& e) {
    EXPECT_EQ(e.key(), (embedstore::RecordKey{"x", 1, 1, "n"}));
  }
}

TEST(PredictItem, ZeroVectorIsDegenerate) {
  Fixture f({0, 0}, {1, 2}, {3, 0}, {1, 1});
  EXPECT_THROW(predict_item(f.item, f.store, kLast), DegenerateError);
}

TEST(PredictItem, ScaleInvarianceSymmetryAndBounds) {
  std::mt19937 rng(4);
  std::normal_distribution<double> val(0, 1);
  std::uniform_real_distribution<double> positive(0.01, 100);
  auto vec = [&] {
    std::vector<double> v(6);
    for (auto& x : v) x = val(rng);
    return v;
  };
  for (int t = 0; t < 200; ++t) {
    auto a = vec(), b = vec(), c = vec(), d = vec();
    Fixture f(a, b, c, d);
    const auto p = predict_item(f.item, f.store, kLast);
    EXPECT_LE(std::abs(p.sim1), 1.0);
    EXPECT_LE(std::abs(p.sim2), 1.0);
    EXPECT_LE(std::abs(p.change), 2.0);

    const double k = positive(rng);
    auto scaled = [k](std::vector<double> v) {
      for (auto& x : v) x *= k;
      return v;
    };
    Fixture g(scaled(a), b, c, scaled(d));
    const auto q = predict_item(g.item, g.store, kLast);
    EXPECT_NEAR(q.sim1, p.sim1, 1e-9);
    EXPECT_NEAR(q.sim2, p.sim2, 1e-9);
    EXPECT_NEAR(q.change, p.change, 1e-9);

    Fixture swapped(b, a, d, c);
    const auto s = predict_item(swapped.item, swapped.store, kLast);
    EXPECT_EQ(s.sim1, p.sim1);
    EXPECT_EQ(s.sim2, p.sim2);
  }
}

}  // namespace

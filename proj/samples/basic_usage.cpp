// Scores the bundled test fixture with two configs and prints the tables.
//
//   ./build/samples/basic_usage tests/data/fixture.tsv tests/data/fixture_embeddings.jsonl

#include <fstream>
#include <iostream>

#include "cosim/cosim.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: basic_usage DATASET.tsv EMBEDDINGS.jsonl\n";
    return 1;
  }
  std::ifstream data(argv[1]), emb(argv[2]);
  const auto ds = cosim::corpus::parse_dataset(data, cosim::corpus::Language::en);
  const auto store = cosim::embedstore::read_store(emb);

  cosim::harness::SweepSpec spec;
  for (const char* text : {"toy@layer:-1", "toy@mix@mean"}) {
    auto config = cosim::combine::parse_config(text);
    spec.configs.push_back({cosim::combine::display_label(config), config, {}});
  }
  const auto report = cosim::harness::run_sweep(ds, store, spec);

  for (const auto& p : report.results.front().predictions) {
    std::cout << p.item_id << ": sim1=" << p.sim1 << " sim2=" << p.sim2 << " change=" << p.change << '\n';
  }
  std::cout << '\n' << cosim::harness::render_tables(report);
}

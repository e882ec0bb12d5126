#include <doctest.h>

#include <cmath>
#include <set>

#include <ptsem/errors.hpp>
#include <ptsem/oracle.hpp>

#include "test_support.hpp"

using namespace ptsem;
using test_support::make_kg;
using test_support::pour_oil_hypotheses;

TEST_CASE("a single slot enumerates one state per candidate") {
  auto kg = make_kg("RelatedTo\tx\ty\t1.0\n");
  HypothesisSet h;
  h.segment = "s";
  Slot slot;
  slot.id = "action";
  slot.role = SlotRole::Action;
  slot.candidates = {{"pour", 1.8}, {"put", 1.2}, {"pick", 0.5}};
  h.slots = {slot};

  OracleResult r = oracle_search(h, kg, InferenceParams{}, 1000);
  CHECK(r.space_size == 3);
  REQUIRE(r.ranked.size() == 3);
  CHECK(r.ranked[0].energy == doctest::Approx(-std::tanh(1.8)).epsilon(1e-12));
  CHECK(r.ranked[1].energy == doctest::Approx(-std::tanh(1.2)).epsilon(1e-12));
  CHECK(r.ranked[2].energy == doctest::Approx(-std::tanh(0.5)).epsilon(1e-12));
  CHECK(r.ranked[0].key == "G:action=pour;C:");
}

TEST_CASE("cue subsets multiply the enumerated space per assignment") {
  auto kg = make_kg(test_support::kPourOilKgText);
  OracleResult r =
      oracle_search(pour_oil_hypotheses(), kg, InferenceParams{}, 1000);
  // (pour,oil) carries three rankable cues: 2^3 states. The other three
  // assignments have empty pools and contribute one state each.
  CHECK(r.space_size == 11);

  double best =
      -(std::tanh(1.8) + std::tanh(1.5) +
        2 * (std::tanh(1.0) + std::tanh(0.9) + std::tanh(0.5)));
  REQUIRE(!r.ranked.empty());
  CHECK(r.ranked[0].energy == doctest::Approx(best).epsilon(1e-12));
  CHECK(r.ranked[0].key == "G:action=pour|object=oil;C:black,fuel,liquid");
  CHECK(r.ranked[0].connected);
  // The reported energy must agree with a from-scratch recomputation.
  CHECK(std::fabs(r.ranked[0].config.recompute().total - r.ranked[0].energy) <=
        1e-9);
  // Every attached cue records the concept pair it bridges.
  for (const Site& s : r.ranked[0].config.sites()) {
    if (s.gen.kind != GeneratorKind::Ungrounded) continue;
    const auto& prov = std::get<CueProvenance>(s.gen.provenance);
    CHECK(prov.from_concept == "pour");
    CHECK(prov.to_concept == "oil");
  }
}

TEST_CASE("ranked results are deduplicated and sorted") {
  auto kg = make_kg(test_support::kPourOilKgText);
  InferenceParams p;
  p.top_n = 8;
  OracleResult r = oracle_search(pour_oil_hypotheses(), kg, p, 1000);
  std::set<std::string> keys;
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    CHECK(keys.insert(r.ranked[i].key).second);
    if (i > 0) CHECK(r.ranked[i - 1].energy <= r.ranked[i].energy + 1e-12);
  }
}

TEST_CASE("a refusal reports the exact state count") {
  // Two slots with 2 and 13 candidates and no usable knowledge between
  // them: exactly 26 states, every cue pool empty.
  std::string kg_text = "RelatedTo\tunrelated\tthing\t1.0\n";
  auto kg = make_kg(kg_text);
  HypothesisSet h;
  h.segment = "s";
  Slot a;
  a.id = "action";
  a.role = SlotRole::Action;
  a.candidates = {{"a0", 1.0}, {"a1", 0.9}};
  Slot b;
  b.id = "object";
  b.role = SlotRole::Object;
  for (int i = 0; i < 13; ++i) {
    b.candidates.push_back({"b" + std::to_string(i), 1.0 - 0.01 * i});
  }
  h.slots = {a, b};

  try {
    oracle_search(h, kg, InferenceParams{}, 10);
    FAIL("expected a budget refusal");
  } catch (const BudgetError& e) {
    CHECK(e.space_size == 26);
  }
  // The same instance fits under a larger budget.
  OracleResult r = oracle_search(h, kg, InferenceParams{}, 26);
  CHECK(r.space_size == 26);
}

TEST_CASE("the refusal size is exact even when far past the budget") {
  auto kg = make_kg(test_support::kPourOilKgText);
  try {
    oracle_search(pour_oil_hypotheses(), kg, InferenceParams{}, 2);
    FAIL("expected a budget refusal");
  } catch (const BudgetError& e) {
    CHECK(e.space_size == 11);
  }
}

TEST_CASE("a zero budget is rejected up front") {
  auto kg = make_kg(test_support::kPourOilKgText);
  CHECK_THROWS_AS(oracle_search(pour_oil_hypotheses(), kg, InferenceParams{}, 0),
                  Error);
}

TEST_CASE("annealing with default settings finds the oracle minimum here") {
  auto kg = make_kg(test_support::kPourOilKgText);
  HypothesisSet h = pour_oil_hypotheses();
  OracleResult exact = oracle_search(h, kg, InferenceParams{}, 1000);
  InferenceParams p;
  p.rng_seed = 4242;
  AnnealResult approx = anneal(h, kg, p);
  REQUIRE(!approx.ranked.empty());
  REQUIRE(!exact.ranked.empty());
  CHECK(approx.ranked[0].key == exact.ranked[0].key);
  CHECK(approx.ranked[0].energy ==
        doctest::Approx(exact.ranked[0].energy).epsilon(1e-9));
}

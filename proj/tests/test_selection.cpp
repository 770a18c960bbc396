#include <doctest.h>

#include "daugs/selection.hpp"

using namespace daugs;

namespace {

SegmenterSpec scored(int model_id, int run_id, double dice) {
  SegmenterSpec s;
  s.kind = SegmenterKind::PerturbedOracle;
  s.model_id = model_id;
  s.run_id = run_id;
  s.checkpoint_id = model_id;
  s.validation_dice = dice;
  return s;
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("argmin u_pp") {
    const std::vector<SelectionEntry> e = {{0, 0.3, 3, 10}, {1, 0.1, 5, 50}, {2, 0.2, 1, 5}};
    const Selection s = daugs_select(e);
    CHECK(s.chosen == 1);
    CHECK(s.ranking == std::vector<std::size_t>{1, 2, 0});
    CHECK(daugs_select(e, UMetric::Utot).chosen == 2);
  }

  TEST_CASE("ties go to the lower model id") {
    const std::vector<SelectionEntry> e = {{7, 0.1, 1, 10}, {3, 0.1, 1, 10}, {5, 0.1, 1, 10}};
    CHECK(daugs_select(e).chosen == 1);
    CHECK(daugs_select(e).ranking == std::vector<std::size_t>{1, 2, 0});
  }

  TEST_CASE("empty myocardium ranks last under both metrics") {
    const std::vector<SelectionEntry> e = {{0, kInfiniteUncertainty, 0.0, 0}, {1, 0.4, 2.0, 5}};
    CHECK(daugs_select(e).chosen == 1);
    CHECK(daugs_select(e, UMetric::Utot).chosen == 1);
    const std::vector<SelectionEntry> all_empty = {{4, kInfiniteUncertainty, 0, 0}, {2, kInfiniteUncertainty, 0, 0}};
    CHECK(daugs_select(all_empty).chosen == 1);
    CHECK_THROWS_AS(daugs_select(std::vector<SelectionEntry>{}), DataError);
  }

  TEST_CASE("metric names") {
    CHECK(parse_umetric("utot") == UMetric::Utot);
    CHECK(to_string(UMetric::Upp) == "upp");
    CHECK_THROWS_AS(parse_umetric("max"), DataError);
  }

  TEST_CASE("established choice") {
    std::vector<SegmenterSpec> pool = {scored(4, 0, 0.9), scored(2, 0, 0.95), scored(1, 0, 0.95)};
    CHECK(established_choice(pool) == 1);
    pool.push_back(SegmenterSpec{});
    CHECK_THROWS_AS(established_choice(pool), DataError);
  }

  TEST_CASE("checkpoint filter caps each run") {
    std::vector<SegmenterSpec> c;
    for (int r = 0; r < 5; ++r)
      for (int k = 0; k < 12; ++k) c.push_back(scored(r * 12 + k, r, 0.88 + 0.001 * k));
    const FilterResult f = checkpoint_filter(c);
    REQUIRE(f.kept.size() == 50);
    CHECK(f.warnings.empty());
    // Run 0 keeps its ten best: checkpoints 11 down to 2.
    CHECK(f.kept[0].model_id == 11);
    CHECK(f.kept[9].model_id == 2);
    CHECK(f.kept[10].run_id == 1);
  }

  TEST_CASE("threshold is inclusive and empty runs warn") {
    std::vector<SegmenterSpec> c = {scored(0, 0, 0.87), scored(1, 0, 0.86999), scored(2, 1, 0.5)};
    const FilterResult f = checkpoint_filter(c);
    REQUIRE(f.kept.size() == 1);
    CHECK(f.kept[0].model_id == 0);
    REQUIRE(f.warnings.size() == 1);
    CHECK(f.warnings[0].find("run 1") != std::string::npos);
  }
}

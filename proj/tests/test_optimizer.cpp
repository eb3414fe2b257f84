#include <doctest.h>

#include <cmath>
#include <random>

#include "irsa/error.hpp"
#include "irsa/models.hpp"
#include "irsa/optimizer.hpp"
#include "oracles.hpp"

using namespace irsa;

namespace {

struct Instance {
  DesignLayout layout;
  ClusterAssignment assignment;
};

// Random labels over a small design; every cluster non-empty.
Instance random_instance(std::mt19937_64& rng, int k, std::size_t n, std::size_t d) {
  Instance in{{n, d}, {}};
  std::vector<int> labels(in.layout.total_rows());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    labels[r] = r < static_cast<std::size_t>(k) ? static_cast<int>(r) : static_cast<int>(rng() % k);
  }
  std::ranges::shuffle(labels, rng);
  in.assignment = make_assignment(labels, k);
  return in;
}

double rescore(const IrsaResult& r, const Instance& in) {
  const auto m = result_membership(r, in.assignment);
  const auto s = pick_freeze_sums(m, in.layout, r.input);
  const bool first = r.criterion == Criterion::SI || r.criterion == Criterion::SIDiff;
  return first ? *try_first_order_index(s) : *try_total_order_index(s);
}

}  // namespace

TEST_CASE("criterion and algorithm names") {
  CHECK(parse_criterion("si_diff") == Criterion::SIDiff);
  CHECK(std::string(to_string(Criterion::TSI)) == "tsi");
  CHECK(parse_algorithm("smprime") == Algorithm::SMPrime);
  CHECK_THROWS_AS(parse_criterion("foo"), ConfigError);
  CHECK_THROWS_AS(parse_algorithm("xm"), ConfigError);
}

TEST_CASE("SM and DM optima equal the brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const auto in = random_instance(rng, k, 8 + rng() % 20, 1 + rng() % 3);
    const double gamma = trial % 3 == 0 ? 0.0 : 0.05 * static_cast<double>(trial % 4);
    SearchOptions opt;
    opt.gamma = gamma;
    opt.threads = 1 + trial % 3;
    const oracle::Blocks bl{in.layout.n, in.layout.d};
    for (std::size_t i = 0; i < in.layout.d; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      for (auto crit : {Criterion::SI, Criterion::TSI}) {
        const auto o = oracle::brute_force_sm(in.assignment.labels, k, bl, i,
                                              crit == Criterion::SI ? oracle::Crit::First : oracle::Crit::Total, gamma);
        if (!o.found) {
          CHECK_THROWS_AS(irsa_sm(in.assignment, in.layout, i, crit, opt), NoFeasiblePartition);
          continue;
        }
        const auto r = irsa_sm(in.assignment, in.layout, i, crit, opt);
        CHECK(r.score == o.score);
        CHECK(rescore(r, in) == r.score);
        CHECK(r.gamma_observed >= gamma);
      }
      if (k < 3 && trial % 2) continue;
      for (auto crit : {Criterion::SIDiff, Criterion::TSIDiff}) {
        const auto o = oracle::brute_force_dm(in.assignment.labels, k, bl, i,
                                              crit == Criterion::SIDiff ? oracle::Crit::First : oracle::Crit::Total, gamma);
        if (!o.found) {
          CHECK_THROWS_AS(irsa_dm(in.assignment, in.layout, i, crit, opt), NoFeasiblePartition);
          continue;
        }
        const auto r = irsa_dm(in.assignment, in.layout, i, crit, opt);
        CHECK(r.score == o.score);
        CHECK(rescore(r, in) == r.score);
        CHECK(r.gamma_observed >= gamma);
      }
    }
  }
}

TEST_CASE("DM score is never below SM score") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const auto in = random_instance(rng, k, 30, 2);
    const auto sm = irsa_sm_all(in.assignment, in.layout, Criterion::SI);
    const auto dm = irsa_dm_all(in.assignment, in.layout, Criterion::SIDiff);
    const auto smt = irsa_sm_all(in.assignment, in.layout, Criterion::TSI);
    const auto dmt = irsa_dm_all(in.assignment, in.layout, Criterion::TSIDiff);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(dm[i].score >= sm[i].score);
      CHECK(dmt[i].score >= smt[i].score);
    }
  }
}

TEST_CASE("all-input pass agrees with per-input search") {
  std::mt19937_64 rng(3);
  const auto in = random_instance(rng, 6, 25, 3);
  const auto all = irsa_sm_all(in.assignment, in.layout, Criterion::SI);
  const auto alld = irsa_dm_all(in.assignment, in.layout, Criterion::TSIDiff);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto one = irsa_sm(in.assignment, in.layout, i, Criterion::SI);
    CHECK(all[i].score == one.score);
    CHECK(all[i].parts == one.parts);
    const auto oned = irsa_dm(in.assignment, in.layout, i, Criterion::TSIDiff);
    CHECK(alld[i].score == oned.score);
    CHECK(alld[i].parts == oned.parts);
  }
}

TEST_CASE("thread count does not change the result") {
  std::mt19937_64 rng(4);
  const auto in = random_instance(rng, 9, 40, 2);
  SearchOptions one, many;
  many.threads = 4;
  one.keep_all_scores = many.keep_all_scores = true;
  const auto a = irsa_dm(in.assignment, in.layout, 1, Criterion::SIDiff, one);
  const auto b = irsa_dm(in.assignment, in.layout, 1, Criterion::SIDiff, many);
  CHECK(a.best_index == b.best_index);
  CHECK(a.parts == b.parts);
  REQUIRE(a.all_scores.size() == b.all_scores.size());
  for (std::size_t c = 0; c < a.all_scores.size(); ++c) {
    CHECK((a.all_scores[c] == b.all_scores[c] || (std::isnan(a.all_scores[c]) && std::isnan(b.all_scores[c]))));
  }
}

TEST_CASE("candidate counts and skipped bookkeeping") {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 5, 20, 1);
  SearchOptions opt;
  opt.keep_all_scores = true;
  const auto sm = irsa_sm(in.assignment, in.layout, 0, Criterion::SI, opt);
  CHECK(sm.candidates == two_partition_count(5));
  CHECK(sm.all_scores.size() == sm.candidates);
  const auto dm = irsa_dm(in.assignment, in.layout, 0, Criterion::SIDiff, opt);
  CHECK(dm.candidates == 3 * three_partition_count(5) + two_partition_count(5));
  CHECK(dm.parts.size() == 3);

  opt.gamma = 0.3;
  const auto g = irsa_sm(in.assignment, in.layout, 0, Criterion::SI, opt);
  std::uint64_t nan = 0;
  for (double s : g.all_scores) nan += std::isnan(s) ? 1 : 0;
  CHECK(nan == g.skipped_gamma + g.skipped_degenerate);
  CHECK(g.gamma_observed >= 0.3);
}

TEST_CASE("ties keep the first canonical candidate") {
  // Two clusters: the only split is {0} | {1}.
  const DesignLayout layout{4, 1};
  std::vector<int> labels(layout.total_rows());
  for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = static_cast<int>(r % 2);
  const auto a = make_assignment(labels, 2);
  SearchOptions opt;
  opt.keep_all_scores = true;
  const auto r = irsa_sm(a, layout, 0, Criterion::SI, opt);
  CHECK(r.best_index == 0);
  CHECK(r.parts[0] == std::vector<int>{0});
  CHECK(r.parts[1] == std::vector<int>{1});

  // The winner beats every earlier candidate strictly.
  std::mt19937_64 rng(9);
  const auto in = random_instance(rng, 4, 20, 1);
  const auto s = irsa_sm(in.assignment, in.layout, 0, Criterion::SI, opt);
  for (std::uint64_t c = 0; c < s.best_index; ++c) {
    CHECK((std::isnan(s.all_scores[c]) || s.all_scores[c] < s.score));
  }
}

TEST_CASE("guards and validation") {
  std::mt19937_64 rng(6);
  const auto in = random_instance(rng, 3, 10, 1);
  CHECK_THROWS_AS(irsa_sm(in.assignment, in.layout, 0, Criterion::SIDiff), ConfigError);
  CHECK_THROWS_AS(irsa_dm(in.assignment, in.layout, 0, Criterion::SI), ConfigError);
  SearchOptions bad;
  bad.gamma = -0.1;
  CHECK_THROWS_AS(irsa_sm(in.assignment, in.layout, 0, Criterion::SI, bad), DomainError);
  const auto one = make_assignment(std::vector<int>(in.layout.total_rows(), 0), 1);
  CHECK_THROWS_AS(irsa_sm(one, in.layout, 0, Criterion::SI), DomainError);

  const DesignLayout wide{30, 1};
  std::vector<int> labels(wide.total_rows());
  for (std::size_t r = 0; r < labels.size(); ++r) labels[r] = static_cast<int>(r % 23);
  const auto many = make_assignment(labels, 23);
  CHECK_THROWS_AS(irsa_sm(many, wide, 0, Criterion::SI), CapacityError);
  std::vector<int> labels15(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) labels15[r] = static_cast<int>(r % 15);
  CHECK_THROWS_AS(irsa_dm(make_assignment(labels15, 15), wide, 0, Criterion::SIDiff), CapacityError);

  SearchOptions all_out;
  all_out.gamma = 0.5;
  const auto lopsided = random_instance(rng, 2, 10, 1);
  auto skewed = lopsided.assignment;
  std::ranges::fill(skewed.labels, 0);
  skewed.labels[0] = 1;
  CHECK_THROWS_AS(irsa_sm(skewed, lopsided.layout, 0, Criterion::SI, all_out), NoFeasiblePartition);
}

TEST_CASE("result JSON round trip") {
  std::mt19937_64 rng(7);
  const auto in = random_instance(rng, 4, 12, 2);
  SearchOptions opt;
  opt.keep_all_scores = true;
  opt.gamma = 0.1;
  auto r = irsa_dm(in.assignment, in.layout, 1, Criterion::TSIDiff, opt);
  r.seed_chain = {1, 2};
  const auto j = to_json(r);
  CHECK(j["input"] == 2);
  const auto back = result_from_json(j);
  CHECK(back.score == r.score);
  CHECK(back.parts == r.parts);
  CHECK(back.input == r.input);
  CHECK(back.algorithm == r.algorithm);
  CHECK(back.criterion == r.criterion);
  CHECK(back.reduced == r.reduced);
  CHECK(back.seed_chain == r.seed_chain);
  CHECK(to_json(back) == j);
}

TEST_CASE("SM' on the sign-abs model finds the sign split") {
  const auto model = builtin_model("signabs");
  const auto design = build_design(model.inputs, 1000, 1);
  const auto out = evaluate_model(model.model, design, model.output_names);
  const auto elem = kmeans(out.values, 20, 5);
  SmPrimeOptions opt;
  opt.k_h = 6;
  const auto r = irsa_sm_prime(design, elem, 0, opt);
  CHECK(r.algorithm == Algorithm::SMPrime);
  REQUIRE(r.meta.has_value());
  CHECK(r.meta->k == 6);
  CHECK(r.score > 0.9);
  opt.k_h = 25;
  CHECK_THROWS(irsa_sm_prime(design, elem, 0, opt));
}

TEST_CASE("histogram aggregation property holds on random instances") {
  const auto report = aggregation_property_check(40, 3);
  CHECK(report.trials == 40);
  CHECK(report.passed());
  CHECK(report.separation_checks > 0);
  CHECK(report.step_checks > 0);
  CHECK(report.counterexamples.empty());
}

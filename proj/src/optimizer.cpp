#include "irsa/optimizer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "irsa/error.hpp"

namespace irsa {

const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::SI: return "si";
    case Criterion::TSI: return "tsi";
    case Criterion::SIDiff: return "si_diff";
    case Criterion::TSIDiff: return "tsi_diff";
  }
  return "?";
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SM: return "sm";
    case Algorithm::DM: return "dm";
    case Algorithm::SMPrime: return "smprime";
  }
  return "?";
}

Criterion parse_criterion(const std::string& s) {
  if (s == "si") return Criterion::SI;
  if (s == "tsi") return Criterion::TSI;
  if (s == "si_diff") return Criterion::SIDiff;
  if (s == "tsi_diff") return Criterion::TSIDiff;
  throw ConfigError(fmt::format("criterion: unknown value '{}' (si|tsi|si_diff|tsi_diff)", s));
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "sm") return Algorithm::SM;
  if (s == "dm") return Algorithm::DM;
  if (s == "smprime") return Algorithm::SMPrime;
  throw ConfigError(fmt::format("algorithm: unknown value '{}' (sm|dm|smprime)", s));
}

namespace {

// Per-cluster block counts and cross counts for one input. For a membership
// that is constant on each cluster (value z_k on cluster k), every
// PickFreezeSums entry is a linear or bilinear form in z over these tables.
struct InputTables {
  std::vector<std::int64_t> a, b, ab, ba;  // K
  // K x K pair counts: entry (k, l) counts j with labels (k, l) on the pair
  std::vector<std::int64_t> b_ab;  // (B_j, AB_i,j)
  std::vector<std::int64_t> a_ba;  // (A_j, BA_i,j)
  std::vector<std::int64_t> a_ab;  // (A_j, AB_i,j)
  std::vector<std::int64_t> b_ba;  // (B_j, BA_i,j)
};

struct Tables {
  int k = 0;
  std::int64_t n = 0;
  std::int64_t total_rows = 0;
  std::vector<std::int64_t> cluster_rows;  // over all N rows
  std::vector<InputTables> inputs;         // indexed by position in `input_ids`
  std::vector<std::size_t> input_ids;
};

Tables build_tables(const ClusterAssignment& assignment, const DesignLayout& layout,
                    const std::vector<std::size_t>& input_ids) {
  validate(assignment);
  if (assignment.size() != layout.total_rows()) {
    throw DomainError(fmt::format("assignment has {} rows, design layout expects N = {}",
                                  assignment.size(), layout.total_rows()));
  }
  Tables t;
  t.k = assignment.k;
  t.n = static_cast<std::int64_t>(layout.n);
  t.total_rows = static_cast<std::int64_t>(layout.total_rows());
  t.input_ids = input_ids;
  const auto k = static_cast<std::size_t>(assignment.k);
  t.cluster_rows.assign(k, 0);
  for (int label : assignment.labels) ++t.cluster_rows[static_cast<std::size_t>(label)];

  const auto& lab = assignment.labels;
  for (std::size_t input : input_ids) {
    if (input >= layout.d) {
      throw DomainError(fmt::format("input index {} outside [0, {})", input, layout.d));
    }
    InputTables it;
    it.a.assign(k, 0);
    it.b.assign(k, 0);
    it.ab.assign(k, 0);
    it.ba.assign(k, 0);
    it.b_ab.assign(k * k, 0);
    it.a_ba.assign(k * k, 0);
    it.a_ab.assign(k * k, 0);
    it.b_ba.assign(k * k, 0);
    for (std::size_t j = 0; j < layout.n; ++j) {
      const auto la = static_cast<std::size_t>(lab[layout.a_row(j)]);
      const auto lb = static_cast<std::size_t>(lab[layout.b_row(j)]);
      const auto lab_i = static_cast<std::size_t>(lab[layout.ab_row(input, j)]);
      const auto lba_i = static_cast<std::size_t>(lab[layout.ba_row(input, j)]);
      ++it.a[la];
      ++it.b[lb];
      ++it.ab[lab_i];
      ++it.ba[lba_i];
      ++it.b_ab[lb * k + lab_i];
      ++it.a_ba[la * k + lba_i];
      ++it.a_ab[la * k + lab_i];
      ++it.b_ba[lb * k + lba_i];
    }
    t.inputs.push_back(std::move(it));
  }
  return t;
}

// A candidate membership: +1 on `plus` clusters, -1 on `minus` clusters.
struct Candidate {
  std::uint32_t plus = 0;
  std::uint32_t minus = 0;
};

PickFreezeSums sums_for(const Tables& t, const InputTables& it, Candidate c) {
  PickFreezeSums s;
  s.n = t.n;
  const auto k = static_cast<std::size_t>(t.k);
  int ids[32];
  int vals[32];
  int count = 0;
  for (std::uint32_t m = c.plus | c.minus; m; m &= m - 1) {
    const int id = std::countr_zero(m);
    ids[count] = id;
    vals[count] = (c.plus >> id & 1u) ? 1 : -1;
    ++count;
  }
  for (int p = 0; p < count; ++p) {
    const auto kp = static_cast<std::size_t>(ids[p]);
    const std::int64_t z = vals[p];
    s.a_sum += z * it.a[kp];
    s.a_sq += it.a[kp];
    s.b_sum += z * it.b[kp];
    s.b_sq += it.b[kp];
    s.ab_sum += z * it.ab[kp];
    s.ab_sq += it.ab[kp];
    s.ba_sum += z * it.ba[kp];
    s.ba_sq += it.ba[kp];
    const std::int64_t* row_bab = &it.b_ab[kp * k];
    const std::int64_t* row_aba = &it.a_ba[kp * k];
    const std::int64_t* row_aab = &it.a_ab[kp * k];
    const std::int64_t* row_bba = &it.b_ba[kp * k];
    for (int q = 0; q < count; ++q) {
      const auto kq = static_cast<std::size_t>(ids[q]);
      const std::int64_t zz = z * vals[q];
      s.b_ab += zz * row_bab[kq];
      s.a_ba += zz * row_aba[kq];
      s.a_ab += zz * row_aab[kq];
      s.b_ba += zz * row_bba[kq];
    }
  }
  return s;
}

std::optional<double> criterion_value(Criterion crit, const PickFreezeSums& s,
                                      FirstOrderEstimator est) {
  switch (crit) {
    case Criterion::SI:
    case Criterion::SIDiff:
      return try_first_order_index(s, est);
    case Criterion::TSI:
    case Criterion::TSIDiff:
      return try_total_order_index(s);
  }
  return std::nullopt;
}

std::int64_t rows_in(const Tables& t, std::uint32_t mask) {
  std::int64_t r = 0;
  for (; mask; mask &= mask - 1) {
    r += t.cluster_rows[static_cast<std::size_t>(std::countr_zero(mask))];
  }
  return r;
}

// Enumerates a candidate family. `at(index)` returns the candidate and the
// blocks whose sizes enter the gamma constraint.
struct Family {
  std::uint64_t size = 0;
  std::function<void(std::uint64_t, Candidate&, std::array<std::uint32_t, 3>&, int&)> at;
};

Family sm_family(int k) {
  Family f;
  f.size = two_partition_count(k);
  const std::uint32_t full = (std::uint32_t{1} << k) - 1;
  f.at = [full](std::uint64_t index, Candidate& c, std::array<std::uint32_t, 3>& blocks,
                int& nblocks) {
    const auto mask = static_cast<std::uint32_t>(index + 1);
    c = {mask, 0};
    blocks = {mask, ~mask & full, 0};
    nblocks = 2;
  };
  return f;
}

Family dm_family(int k, std::shared_ptr<const std::vector<Partition3>> parts3) {
  Family f;
  const std::uint64_t n3 = parts3 ? parts3->size() : 0;
  f.size = 3 * n3 + two_partition_count(k);
  const std::uint32_t full = (std::uint32_t{1} << k) - 1;
  f.at = [full, n3, parts3](std::uint64_t index, Candidate& c,
                            std::array<std::uint32_t, 3>& blocks, int& nblocks) {
    if (index < 3 * n3) {
      const auto& p = (*parts3)[index / 3];
      static constexpr int kPairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      const auto& pair = kPairs[index % 3];
      c = {p.blocks[static_cast<std::size_t>(pair[0])],
           p.blocks[static_cast<std::size_t>(pair[1])]};
      blocks = p.blocks;
      nblocks = 3;
    } else {
      const auto mask = static_cast<std::uint32_t>(index - 3 * n3 + 1);
      c = {mask, 0};
      blocks = {mask, ~mask & full, 0};
      nblocks = 2;
    }
  };
  return f;
}

struct Best {
  double score = -std::numeric_limits<double>::infinity();
  std::uint64_t index = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t ties = 0;
  double gamma_observed = 0.0;
  bool found = false;
};

struct ChunkResult {
  std::vector<Best> best;  // per input
  std::vector<std::uint64_t> skipped_degenerate;
  std::uint64_t skipped_gamma = 0;
};

std::vector<IrsaResult> run_search(const Tables& t, const Family& family,
                                   Algorithm algorithm, Criterion criterion,
                                   const SearchOptions& options) {
  const std::size_t n_inputs = t.inputs.size();
  if (!std::isfinite(options.gamma) || options.gamma < 0.0) {
    throw DomainError(fmt::format("gamma must be a finite fraction >= 0, got {}", options.gamma));
  }
  const double total = static_cast<double>(t.total_rows);

  std::vector<std::vector<double>> all_scores;
  if (options.keep_all_scores) {
    all_scores.assign(n_inputs, std::vector<double>(family.size,
                                                    std::numeric_limits<double>::quiet_NaN()));
  }

  auto scan = [&](std::uint64_t begin, std::uint64_t end, ChunkResult& out) {
    out.best.assign(n_inputs, Best{});
    out.skipped_degenerate.assign(n_inputs, 0);
    Candidate cand;
    std::array<std::uint32_t, 3> blocks{};
    int nblocks = 0;
    for (std::uint64_t index = begin; index < end; ++index) {
      family.at(index, cand, blocks, nblocks);
      std::int64_t smallest = std::numeric_limits<std::int64_t>::max();
      for (int b = 0; b < nblocks; ++b) {
        smallest = std::min(smallest, rows_in(t, blocks[static_cast<std::size_t>(b)]));
      }
      const double observed = static_cast<double>(smallest) / total;
      if (observed < options.gamma) {
        ++out.skipped_gamma;
        continue;
      }
      for (std::size_t in = 0; in < n_inputs; ++in) {
        const auto sums = sums_for(t, t.inputs[in], cand);
        const auto value = criterion_value(criterion, sums, options.estimator);
        if (!value) {
          ++out.skipped_degenerate[in];
          continue;
        }
        if (options.keep_all_scores) all_scores[in][index] = *value;
        auto& best = out.best[in];
        if (!best.found || *value > best.score) {
          best = {*value, index, 1, observed, true};
        } else if (*value == best.score) {
          ++best.ties;
        }
      }
    }
  };

  const unsigned workers = std::max(
      1u, static_cast<unsigned>(std::min<std::uint64_t>(options.threads, family.size)));
  std::vector<ChunkResult> chunks(workers);
  const std::uint64_t chunk = (family.size + workers - 1) / workers;
  if (workers == 1) {
    scan(0, family.size, chunks[0]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min(family.size, w * chunk);
      const std::uint64_t end = std::min(family.size, begin + chunk);
      pool.emplace_back(scan, begin, end, std::ref(chunks[w]));
    }
  }

  // Chunks cover increasing index ranges, so a strict comparison keeps the
  // earliest candidate on ties regardless of completion order.
  std::uint64_t skipped_gamma = 0;
  for (const auto& c : chunks) skipped_gamma += c.skipped_gamma;

  std::vector<IrsaResult> results;
  for (std::size_t in = 0; in < n_inputs; ++in) {
    Best best;
    std::uint64_t degenerate = 0;
    for (const auto& c : chunks) {
      degenerate += c.skipped_degenerate[in];
      const auto& b = c.best[in];
      if (!b.found) continue;
      if (!best.found || b.score > best.score) {
        best = b;
      } else if (b.score == best.score) {
        best.ties += b.ties;
      }
    }
    const std::size_t input = t.input_ids[in];
    if (!best.found) {
      throw NoFeasiblePartition(fmt::format(
          "input {}: no partition of {} clusters satisfies gamma = {} with a "
          "non-degenerate membership ({} skipped for size, {} degenerate)",
          input + 1, t.k, options.gamma, skipped_gamma, degenerate));
    }

    Candidate cand;
    std::array<std::uint32_t, 3> blocks{};
    int nblocks = 0;
    family.at(best.index, cand, blocks, nblocks);
    const auto sums = sums_for(t, t.inputs[in], cand);

    IrsaResult r;
    r.input = input;
    r.algorithm = algorithm;
    r.criterion = criterion;
    r.score = best.score;
    r.first_order = try_first_order_index(sums, options.estimator)
                        .value_or(std::numeric_limits<double>::quiet_NaN());
    r.total = try_total_order_index(sums).value_or(std::numeric_limits<double>::quiet_NaN());
    r.gamma = options.gamma;
    r.gamma_observed = best.gamma_observed;
    r.cluster_count = t.k;
    r.candidates = family.size;
    r.skipped_gamma = skipped_gamma;
    r.skipped_degenerate = degenerate;
    r.ties = best.ties - 1;
    r.best_index = best.index;
    Partition2 p2{cand.plus, t.k};
    if (algorithm == Algorithm::DM) {
      const std::uint32_t full = (std::uint32_t{1} << t.k) - 1;
      const std::uint32_t rest = full & ~(cand.plus | cand.minus);
      r.parts = {Partition2{cand.plus, t.k}.part(), Partition2{cand.minus, t.k}.part(),
                 Partition2{rest, t.k}.part()};
      r.reduced = cand.minus == 0;
    } else {
      r.parts = {p2.part(), p2.rest()};
    }
    if (options.keep_all_scores) r.all_scores = std::move(all_scores[in]);
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<std::size_t> all_inputs(const DesignLayout& layout) {
  std::vector<std::size_t> ids(layout.d);
  for (std::size_t i = 0; i < layout.d; ++i) ids[i] = i;
  return ids;
}

void check_sm(const ClusterAssignment& a, Criterion criterion,
              const SearchOptions& options) {
  if (criterion != Criterion::SI && criterion != Criterion::TSI) {
    throw ConfigError(fmt::format(
        "criterion: single-membership search needs si or tsi, got {}", to_string(criterion)));
  }
  if (a.k < 2) throw DomainError("irsa_sm: need at least 2 clusters");
  if (a.k > kMaxClustersSM && !options.allow_large_k) {
    throw CapacityError(fmt::format(
        "irsa_sm: K = {} exceeds the enumeration guard {} (set allow_large_k to override)",
        a.k, kMaxClustersSM));
  }
}

void check_dm(const ClusterAssignment& a, Criterion criterion,
              const SearchOptions& options) {
  if (criterion != Criterion::SIDiff && criterion != Criterion::TSIDiff) {
    throw ConfigError(fmt::format(
        "criterion: difference-membership search needs si_diff or tsi_diff, got {}",
        to_string(criterion)));
  }
  if (a.k < 2) throw DomainError("irsa_dm: need at least 2 clusters");
  if (a.k > kMaxClustersDM && !options.allow_large_k) {
    throw CapacityError(fmt::format(
        "irsa_dm: K = {} exceeds the enumeration guard {} (set allow_large_k to override)",
        a.k, kMaxClustersDM));
  }
}

Family make_dm_family(int k) {
  std::shared_ptr<const std::vector<Partition3>> parts3;
  if (k >= 3) {
    parts3 = std::make_shared<const std::vector<Partition3>>(enumerate_3partitions(k));
  }
  return dm_family(k, std::move(parts3));
}

}  // namespace

MembershipVector result_membership(const IrsaResult& result,
                                   const ClusterAssignment& searched) {
  if (result.parts.empty() || result.parts[0].empty()) {
    throw DomainError("result has no winning region");
  }
  if (result.algorithm == Algorithm::DM && !result.reduced) {
    return membership_difference(searched, result.parts[0], result.parts[1]);
  }
  auto m = membership(searched, result.parts[0]);
  if (result.algorithm == Algorithm::DM) m.kind = MembershipKind::Difference;
  return m;
}

IrsaResult irsa_sm(const ClusterAssignment& assignment, const DesignLayout& layout,
                   std::size_t input, Criterion criterion, const SearchOptions& options) {
  check_sm(assignment, criterion, options);
  const auto tables = build_tables(assignment, layout, {input});
  return run_search(tables, sm_family(assignment.k), Algorithm::SM, criterion, options)
      .front();
}

std::vector<IrsaResult> irsa_sm_all(const ClusterAssignment& assignment,
                                    const DesignLayout& layout, Criterion criterion,
                                    const SearchOptions& options) {
  check_sm(assignment, criterion, options);
  const auto tables = build_tables(assignment, layout, all_inputs(layout));
  return run_search(tables, sm_family(assignment.k), Algorithm::SM, criterion, options);
}

IrsaResult irsa_dm(const ClusterAssignment& assignment, const DesignLayout& layout,
                   std::size_t input, Criterion criterion, const SearchOptions& options) {
  check_dm(assignment, criterion, options);
  const auto tables = build_tables(assignment, layout, {input});
  return run_search(tables, make_dm_family(assignment.k), Algorithm::DM, criterion,
                    options)
      .front();
}

std::vector<IrsaResult> irsa_dm_all(const ClusterAssignment& assignment,
                                    const DesignLayout& layout, Criterion criterion,
                                    const SearchOptions& options) {
  check_dm(assignment, criterion, options);
  const auto tables = build_tables(assignment, layout, all_inputs(layout));
  return run_search(tables, make_dm_family(assignment.k), Algorithm::DM, criterion,
                    options);
}

IrsaResult irsa_sm_prime(const SobolDesign& design, const ClusterAssignment& elementary,
                         std::size_t input, const SmPrimeOptions& options) {
  if (options.k_h > kMaxClustersSM && !options.search.allow_large_k) {
    throw CapacityError(fmt::format("irsa_sm_prime: K_H = {} exceeds the guard {}",
                                    options.k_h, kMaxClustersSM));
  }
  const auto histograms =
      elementary_histograms(design, elementary, input, options.n_x, options.source);
  auto meta = meta_cluster(histograms, options.k_h, options.linkage);
  const auto merged = compose(elementary, meta);
  auto result = irsa_sm(merged, design.layout, input, Criterion::SI, options.search);
  result.algorithm = Algorithm::SMPrime;
  result.meta = std::move(meta);
  return result;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<int> shift_ids(const std::vector<int>& ids, int by) {
  std::vector<int> out(ids);
  for (int& id : out) id += by;
  return out;
}

}  // namespace

nlohmann::json to_json(const IrsaResult& r) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : r.parts) parts.push_back(shift_ids(p, 1));
  nlohmann::json j = {
      {"input", r.input + 1},
      {"algorithm", to_string(r.algorithm)},
      {"criterion", to_string(r.criterion)},
      {"score", number_or_null(r.score)},
      {"first_order", number_or_null(r.first_order)},
      {"total", number_or_null(r.total)},
      {"partition", std::move(parts)},
      {"reduced", r.reduced},
      {"gamma", r.gamma},
      {"gamma_observed", r.gamma_observed},
      {"cluster_count", r.cluster_count},
      {"candidates", r.candidates},
      {"skipped_gamma_count", r.skipped_gamma},
      {"skipped_degenerate_count", r.skipped_degenerate},
      {"ties", r.ties},
      {"best_index", r.best_index},
      {"seed_chain", r.seed_chain},
  };
  if (r.meta) {
    j["meta_labels"] = shift_ids(r.meta->meta_labels, 1);
  }
  if (!r.all_scores.empty()) {
    nlohmann::json scores = nlohmann::json::array();
    for (double v : r.all_scores) scores.push_back(number_or_null(v));
    j["all_scores"] = std::move(scores);
  }
  return j;
}

IrsaResult result_from_json(const nlohmann::json& j) {
  IrsaResult r;
  r.input = j.at("input").get<std::size_t>() - 1;
  r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  r.criterion = parse_criterion(j.at("criterion").get<std::string>());
  r.score = number_or_nan(j.at("score"));
  r.first_order = number_or_nan(j.at("first_order"));
  r.total = number_or_nan(j.at("total"));
  for (const auto& p : j.at("partition")) r.parts.push_back(shift_ids(p.get<std::vector<int>>(), -1));
  r.reduced = j.at("reduced").get<bool>();
  r.gamma = j.at("gamma").get<double>();
  r.gamma_observed = j.at("gamma_observed").get<double>();
  r.cluster_count = j.at("cluster_count").get<int>();
  r.candidates = j.at("candidates").get<std::uint64_t>();
  r.skipped_gamma = j.at("skipped_gamma_count").get<std::uint64_t>();
  r.skipped_degenerate = j.at("skipped_degenerate_count").get<std::uint64_t>();
  r.ties = j.at("ties").get<std::uint64_t>();
  r.best_index = j.at("best_index").get<std::uint64_t>();
  r.seed_chain = j.at("seed_chain").get<std::vector<std::uint64_t>>();
  if (j.contains("meta_labels")) {
    MetaAssignment meta;
    meta.meta_labels = shift_ids(j.at("meta_labels").get<std::vector<int>>(), -1);
    meta.k = meta.meta_labels.empty()
                 ? 0
                 : *std::ranges::max_element(meta.meta_labels) + 1;
    r.meta = std::move(meta);
  }
  if (j.contains("all_scores")) {
    for (const auto& v : j.at("all_scores")) r.all_scores.push_back(number_or_nan(v));
  }
  return r;
}

}  // namespace irsa

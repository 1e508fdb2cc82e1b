#include "decept/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace decept {

namespace {

void check_inputs(const MdpModel& model, const Policy& policy, int horizon) {
  if (horizon < 0) throw DomainError("horizon must be nonnegative");
  if (policy.rows().size() != model.num_states()) {
    throw DomainError("policy does not cover the model");
  }
}

// sum_a sum_s' pi(s,a) T(s,a,s') next[s']
double expected_next(const MdpModel& model, const Policy& policy, StateId s,
                     const std::vector<double>& next) {
  const auto rows = model.actions_at(s);
  const auto pi = policy.at(s);
  double acc = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double inner = 0.0;
    for (const auto& t : rows[k].outcomes) inner += t.prob * next[t.next];
    acc += pi[k] * inner;
  }
  return acc;
}

}  // namespace

CostTable expected_cost(const MdpModel& model, const Policy& policy,
                        std::span<const double> rewards, int horizon) {
  check_inputs(model, policy, horizon);
  const std::size_t n = model.num_states();
  if (rewards.size() != n) throw DomainError("reward vector does not match the model");
  CostTable table;
  table.q.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(n, 0.0));
  table.q.back().assign(rewards.begin(), rewards.end());
  for (int t = horizon - 1; t >= 0; --t) {
    const auto& next = table.q[static_cast<std::size_t>(t) + 1];
    auto& cur = table.q[static_cast<std::size_t>(t)];
    for (StateId s = 0; s < n; ++s) cur[s] = rewards[s] + expected_next(model, policy, s, next);
  }
  for (StateId s = 0; s < n; ++s) table.total += model.initial()[s] * table.q.front()[s];
  return table;
}

ReachTable reach_probability(const MdpModel& model, const Policy& policy, int horizon,
                             double terminal) {
  check_inputs(model, policy, horizon);
  const std::size_t n = model.num_states();
  ReachTable table;
  table.p.assign(static_cast<std::size_t>(horizon) + 1, std::vector<double>(n, terminal));
  for (auto& row : table.p) {
    for (StateId s : model.sensitive()) row[s] = 1.0;
  }
  for (int t = horizon - 1; t >= 0; --t) {
    const auto& next = table.p[static_cast<std::size_t>(t) + 1];
    auto& cur = table.p[static_cast<std::size_t>(t)];
    for (StateId s = 0; s < n; ++s) {
      if (!model.is_sensitive(s)) cur[s] = expected_next(model, policy, s, next);
    }
  }
  for (StateId s = 0; s < n; ++s) table.total += model.initial()[s] * table.p.front()[s];
  return table;
}

namespace {

constexpr std::uint64_t kChunk = 4096;

// Running count, mean and sum of squared deviations (Welford), merged with
// Chan's pairwise update.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double n = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / n;
    m2 += o.m2 + delta * delta * count * o.count / n;
    count = n;
  }
  Estimate estimate() const {
    if (count < 2.0) return {mean, 0.0};
    return {mean, std::sqrt(m2 / (count - 1.0) / count)};
  }
};

struct ChunkSums {
  Moments cost;
  Moments hits;
};

template <typename Rng>
std::size_t sample_index(Rng& rng, const auto& probs, auto weight_of) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double w = weight_of(probs[i]);
    if (w <= 0.0) continue;
    last_positive = i;
    acc += w;
    if (x < acc) return i;
  }
  return last_positive;
}

struct Sampler {
  const MdpModel& model;
  const Policy& policy;
  std::span<const double> rewards;
  int horizon;

  ChunkSums run_chunk(std::uint64_t seed, std::uint64_t chunk, std::uint64_t count,
                      Path* keep) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    std::mt19937_64 rng(seq);
    ChunkSums sums;
    const auto& nu = model.initial();
    for (std::uint64_t i = 0; i < count; ++i) {
      StateId s = sample_index(rng, nu, [](double p) { return p; });
      double cost = rewards[s];
      bool hit = model.is_sensitive(s);
      if (keep) keep->states.push_back(s);
      for (int t = 0; t < horizon; ++t) {
        const auto rows = model.actions_at(s);
        const auto pi = policy.at(s);
        const std::size_t k = sample_index(rng, pi, [](double p) { return p; });
        const auto& outcomes = rows[k].outcomes;
        const std::size_t j =
            sample_index(rng, outcomes, [](const Transition& tr) { return tr.prob; });
        s = outcomes[j].next;
        cost += rewards[s];
        hit = hit || model.is_sensitive(s);
        if (keep) {
          keep->actions.push_back(rows[k].action);
          keep->states.push_back(s);
        }
      }
      sums.cost.add(cost);
      sums.hits.add(hit ? 1.0 : 0.0);
    }
    return sums;
  }
};

}  // namespace

MonteCarloResult monte_carlo(const MdpModel& model, const Policy& policy,
                             std::span<const double> rewards, int horizon,
                             const MonteCarloOptions& options) {
  check_inputs(model, policy, horizon);
  if (options.paths < 1) throw DomainError("at least one path is required");
  if (rewards.size() != model.num_states()) throw DomainError("reward vector does not match");

  const Sampler sampler{model, policy, rewards, horizon};
  const std::uint64_t chunks = (options.paths + kChunk - 1) / kChunk;
  std::vector<ChunkSums> partial(chunks);
  MonteCarloResult result;
  result.paths = options.paths;
  Path* keep = options.paths == 1 ? &result.first_path : nullptr;

  auto work = [&](std::uint64_t begin, std::uint64_t step) {
    for (std::uint64_t c = begin; c < chunks; c += step) {
      const std::uint64_t count = std::min(kChunk, options.paths - c * kChunk);
      partial[c] = sampler.run_chunk(options.seed, c, count, keep);
    }
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(chunks)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  ChunkSums total;
  for (const auto& p : partial) {
    total.cost.merge(p.cost);
    total.hits.merge(p.hits);
  }
  result.cost = total.cost.estimate();
  result.reach = total.hits.estimate();
  return result;
}

}  // namespace decept

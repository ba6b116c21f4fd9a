#include "dispersion/abm.hpp"

#include <cmath>
#include <string>

namespace dispersion::abm {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::exponential(double rate) {
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t SplitMix64::uniform_below(std::uint64_t n) {
  // Lemire multiply-shift with rejection for exact uniformity.
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (-n) % n;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(next()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace {

// Sites scan linearly per event up to this size; beyond it a Fenwick tree
// over per-site active rates keeps selection O(log N).
constexpr std::int64_t kLinearScanMax = 10000;

inline std::int64_t site_rate(std::int64_t occ) { return occ >= 2 ? occ : 0; }

class RateIndex {
 public:
  static std::vector<std::int64_t> build(
      const std::vector<std::int64_t>& occupancy) {
    const std::size_t n = occupancy.size();
    std::vector<std::int64_t> tree(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      tree[i + 1] += site_rate(occupancy[i]);
      std::size_t parent = (i + 1) + ((i + 1) & -(i + 1));
      if (parent <= n) tree[parent] += tree[i + 1];
    }
    return tree;
  }

  static void add(std::vector<std::int64_t>& tree, std::size_t i,
                  std::int64_t delta) {
    for (std::size_t k = i + 1; k < tree.size(); k += k & -k) {
      tree[k] += delta;
    }
  }

  // Smallest index whose inclusive prefix sum exceeds target.
  static std::int64_t select(const std::vector<std::int64_t>& tree,
                             double target) {
    std::size_t n = tree.size() - 1;
    std::size_t hibit = 1;
    while ((hibit << 1) <= n) hibit <<= 1;
    std::size_t idx = 0;
    double rem = target;
    for (std::size_t step = hibit; step > 0; step >>= 1) {
      std::size_t next = idx + step;
      if (next <= n && static_cast<double>(tree[next]) <= rem) {
        idx = next;
        rem -= static_cast<double>(tree[next]);
      }
    }
    return static_cast<std::int64_t>(idx);
  }
};

std::int64_t select_linear(const std::vector<std::int64_t>& occupancy,
                           double target) {
  double acc = 0.0;
  const std::size_t n = occupancy.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(site_rate(occupancy[i]));
    if (acc > target) return static_cast<std::int64_t>(i);
  }
  return static_cast<std::int64_t>(n) - 1;  // target == total; u < 1 excludes
}

}  // namespace

std::int64_t SiteState::recompute_active_total() const {
  std::int64_t s = 0;
  for (std::int64_t occ : occupancy) s += site_rate(occ);
  return s;
}

SiteState init_state(std::int64_t n_sites, const Placement& placement) {
  if (n_sites < 2) throw InvalidPlacement("need at least two sites");
  SiteState state;
  state.occupancy.assign(static_cast<std::size_t>(n_sites), 0);
  switch (placement.kind) {
    case PlacementKind::AllAtOne:
      if (placement.particles < 0) throw InvalidPlacement("negative particles");
      state.occupancy[0] = placement.particles;
      break;
    case PlacementKind::Even:
      if (placement.particles < 0) throw InvalidPlacement("negative particles");
      if (placement.particles % n_sites != 0) {
        throw InvalidPlacement("even placement requires N | M");
      }
      for (auto& occ : state.occupancy) {
        occ = placement.particles / n_sites;
      }
      break;
    case PlacementKind::FromCounts:
      if (static_cast<std::int64_t>(placement.counts.size()) != n_sites) {
        throw InvalidPlacement("counts length differs from n_sites");
      }
      for (std::int64_t c : placement.counts) {
        if (c < 0) throw InvalidPlacement("negative count");
      }
      state.occupancy = placement.counts;
      break;
  }
  state.n_particles = 0;
  for (std::int64_t occ : state.occupancy) state.n_particles += occ;
  state.active_total = state.recompute_active_total();
  state.time = 0.0;
  return state;
}

namespace {

struct Move {
  std::int64_t source;
  std::int64_t dest;
};

Move draw_move(SiteState& state, SplitMix64& rng,
               std::vector<std::int64_t>* tree) {
  const std::int64_t n = state.n_sites();
  double target = rng.uniform() * static_cast<double>(state.active_total);
  std::int64_t src = (n <= kLinearScanMax || tree == nullptr)
                         ? select_linear(state.occupancy, target)
                         : RateIndex::select(*tree, target);
  // destination uniform among the other N-1 sites
  std::int64_t dst;
  do {
    dst = static_cast<std::int64_t>(
        rng.uniform_below(static_cast<std::uint64_t>(n)));
  } while (dst == src);
  return {src, dst};
}

void apply_move(SiteState& state, const Move& mv,
                std::vector<std::int64_t>* tree) {
  auto s = static_cast<std::size_t>(mv.source);
  auto d = static_cast<std::size_t>(mv.dest);
  std::int64_t old_s = site_rate(state.occupancy[s]);
  std::int64_t old_d = site_rate(state.occupancy[d]);
  state.occupancy[s] -= 1;
  state.occupancy[d] += 1;
  std::int64_t new_s = site_rate(state.occupancy[s]);
  std::int64_t new_d = site_rate(state.occupancy[d]);
  state.active_total += (new_s - old_s) + (new_d - old_d);
  if (tree != nullptr) {
    if (new_s != old_s) RateIndex::add(*tree, s, new_s - old_s);
    if (new_d != old_d) RateIndex::add(*tree, d, new_d - old_d);
  }
}

}  // namespace

std::optional<Event> gillespie_step(SiteState& state, SplitMix64& rng) {
  if (state.terminated()) return std::nullopt;
  state.time += rng.exponential(static_cast<double>(state.active_total));
  Move mv = draw_move(state, rng, nullptr);
  apply_move(state, mv, nullptr);
  return Event{state.time, mv.source, mv.dest};
}

std::vector<std::pair<double, Pmf>> run(SiteState& state, double t_end,
                                        std::span<const double> sample_times,
                                        SplitMix64& rng, int pmf_n_max) {
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] > t_end + 1e-12) {
      throw OutOfDomain("sample time beyond t_end");
    }
    if (i > 0 && sample_times[i] <= sample_times[i - 1]) {
      throw OutOfDomain("sample times must be increasing");
    }
  }

  const std::int64_t n = state.n_sites();
  std::vector<std::int64_t> tree;
  std::vector<std::int64_t>* tree_ptr = nullptr;
  if (n > kLinearScanMax) {
    tree = RateIndex::build(state.occupancy);
    tree_ptr = &tree;
  }

  std::vector<std::pair<double, Pmf>> out;
  out.reserve(sample_times.size());
  std::size_t si = 0;
  auto flush_before = [&](double horizon) {
    while (si < sample_times.size() && sample_times[si] < horizon) {
      out.emplace_back(sample_times[si],
                       empirical_pmf(state, pmf_n_max).pmf);
      ++si;
    }
  };

  while (!state.terminated() && si < sample_times.size()) {
    double t_next =
        state.time + rng.exponential(static_cast<double>(state.active_total));
    if (t_next > t_end) {
      flush_before(t_end + 1e-300);
      state.time = t_end;
      return out;
    }
    flush_before(t_next);
    state.time = t_next;
    Move mv = draw_move(state, rng, tree_ptr);
    apply_move(state, mv, tree_ptr);
  }
  // absorbed (or no samples left): the frozen state fills the rest
  while (si < sample_times.size()) {
    out.emplace_back(sample_times[si], empirical_pmf(state, pmf_n_max).pmf);
    ++si;
  }
  return out;
}

std::int64_t select_source_by_scan(const SiteState& state, double target) {
  return select_linear(state.occupancy, target);
}

std::int64_t select_source_by_tree(const SiteState& state, double target) {
  auto tree = RateIndex::build(state.occupancy);
  return RateIndex::select(tree, target);
}

EmpiricalPmf empirical_pmf(const SiteState& state, int n_max) {
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
  bool overflow = false;
  const double inv_n = 1.0 / static_cast<double>(state.n_sites());
  for (std::int64_t occ : state.occupancy) {
    std::int64_t bucket = occ;
    if (bucket > n_max) {
      bucket = n_max;
      overflow = true;
    }
    w[static_cast<std::size_t>(bucket)] += inv_n;
  }
  return EmpiricalPmf{Pmf::unchecked(std::move(w)), overflow};
}

}  // namespace dispersion::abm

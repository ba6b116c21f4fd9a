#ifndef DISPERSION_ABM_HPP_
#define DISPERSION_ABM_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dispersion/pmf.hpp"

namespace dispersion::abm {

/// SplitMix64 stream generator. 64-bit state, one multiply-xor-shift chain
/// per draw; independent streams come from distinct seeds (replicate r uses
/// seed base + r).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform double in [0, 1), 53 random bits.
  double uniform();

  /// Inverse-transform exponential with the given rate.
  double exponential(double rate);

  /// Unbiased integer in [0, n) by multiply-shift with rejection.
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

enum class PlacementKind { AllAtOne, Even, FromCounts };

struct Placement {
  PlacementKind kind = PlacementKind::Even;
  std::int64_t particles = 0;            // AllAtOne / Even
  std::vector<std::int64_t> counts;      // FromCounts

  static Placement all_at_one(std::int64_t m) {
    return {PlacementKind::AllAtOne, m, {}};
  }
  static Placement even(std::int64_t m) {
    return {PlacementKind::Even, m, {}};
  }
  static Placement from_counts(std::vector<std::int64_t> c) {
    return {PlacementKind::FromCounts, 0, std::move(c)};
  }
};

/// Occupancy state of the N-site particle system. active_total caches
/// sum X_i 1{X_i >= 2} (the total event rate) and is updated incrementally
/// as particles move.
struct SiteState {
  std::vector<std::int64_t> occupancy;
  std::int64_t n_particles = 0;
  std::int64_t active_total = 0;
  double time = 0.0;

  std::int64_t n_sites() const {
    return static_cast<std::int64_t>(occupancy.size());
  }
  bool terminated() const { return active_total == 0; }

  /// Recomputes active_total from scratch (cache-coherence checks).
  std::int64_t recompute_active_total() const;
};

/// Builds the initial state. Even placement requires N | M.
SiteState init_state(std::int64_t n_sites, const Placement& placement);

struct Event {
  double time;
  std::int64_t source;
  std::int64_t dest;
};

/// One exact continuous-time step: advances time by Exponential(active
/// rate), picks the source site with probability X_i 1{X_i>=2} / total,
/// picks the destination uniformly among the other N-1 sites (rejection of
/// the source), and moves one particle. Returns nullopt once no active
/// particles remain.
std::optional<Event> gillespie_step(SiteState& state, SplitMix64& rng);

/// Event loop up to t_end recording the empirical pmf at the given
/// increasing sample times. After termination the frozen absorbed state
/// fills the remaining samples.
std::vector<std::pair<double, Pmf>> run(SiteState& state, double t_end,
                                        std::span<const double> sample_times,
                                        SplitMix64& rng, int pmf_n_max);

struct EmpiricalPmf {
  Pmf pmf;
  bool overflowed;  // some site exceeded n_max; excess mass sits at n_max
};

/// pmf_n = #{i : X_i = n} / N, occupancies above n_max bucketed at n_max.
EmpiricalPmf empirical_pmf(const SiteState& state, int n_max);

/// Both source-selection paths, exposed so tests can pin down that the
/// linear scan and the Fenwick descend pick the same site for the same
/// cumulative target (the loop switches between them on system size).
std::int64_t select_source_by_scan(const SiteState& state, double target);
std::int64_t select_source_by_tree(const SiteState& state, double target);

}  // namespace dispersion::abm

#endif  // DISPERSION_ABM_HPP_

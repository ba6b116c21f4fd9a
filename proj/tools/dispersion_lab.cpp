// dispersion-lab: reproducible experiments on the dispersion process and
// its mean-field limit. Subcommands cover closed-form equilibria, the
// truncated ODE system, exact stochastic simulation, generating-function
// diagnostics, decay-rate estimation, and canned figure reproductions.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dispersion/abm.hpp"
#include "dispersion/equilibria.hpp"
#include "dispersion/io.hpp"
#include "dispersion/meanfield.hpp"
#include "dispersion/metrics.hpp"
#include "dispersion/pgf.hpp"
#include "dispersion/pmf.hpp"

namespace {

using nlohmann::json;
using namespace dispersion;

constexpr int kSchemaVersion = 1;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DISPERSION_LAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw OutOfDomain("DISPERSION_LAB_SEED is not an unsigned integer");
    }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// small parsing helpers
// ---------------------------------------------------------------------------

std::vector<std::string> split_str(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_str(s, ',')) out.push_back(parse_double(tok));
  return out;
}

std::vector<double> parse_samples(const std::string& spec) {
  if (spec.rfind("linspace:", 0) == 0) {
    auto parts = split_str(spec.substr(9), ':');
    if (parts.size() != 3) {
      throw ParseError("samples: expected linspace:<t0>:<t1>:<k>");
    }
    double t0 = parse_double(parts[0]);
    double t1 = parse_double(parts[1]);
    int k = static_cast<int>(parse_double(parts[2]));
    if (k < 1 || t1 < t0) throw ParseError("samples: bad linspace");
    std::vector<double> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      out[static_cast<std::size_t>(i)] =
          k == 1 ? t0 : t0 + (t1 - t0) * i / (k - 1);
    }
    return out;
  }
  return parse_double_list(spec);
}

std::pair<double, double> parse_window(const std::string& s) {
  auto parts = split_str(s, ':');
  if (parts.size() != 2) throw ParseError("window: expected <lo>:<hi>");
  return {parse_double(parts[0]), parse_double(parts[1])};
}

// Initial-condition grammar:
//   delta:<n> | bernoulli | ztp | csv:<path> | split:<n>:<mass>
Pmf make_initial(const std::string& spec, double mu, int n_max) {
  if (spec == "bernoulli") return bernoulli_equilibrium(mu, n_max).pmf;
  if (spec == "ztp") return ztp_equilibrium(mu, n_max).pmf;
  if (spec.rfind("delta:", 0) == 0) {
    int n = static_cast<int>(parse_double(spec.substr(6)));
    if (n < 0 || n > n_max) throw ParseError("delta index out of range");
    std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
    w[static_cast<std::size_t>(n)] = 1.0;
    return Pmf::unchecked(std::move(w));
  }
  if (spec.rfind("split:", 0) == 0) {
    auto parts = split_str(spec.substr(6), ':');
    if (parts.size() != 2) throw ParseError("split: expected split:<n>:<mass>");
    int n = static_cast<int>(parse_double(parts[0]));
    double mass = parse_double(parts[1]);
    if (n < 1 || n > n_max) throw ParseError("split index out of range");
    if (!(mass > 0.0) || mass > 1.0) throw ParseError("split mass not in (0,1]");
    std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
    w[static_cast<std::size_t>(n)] = mass;
    w[0] = 1.0 - mass;
    return Pmf::unchecked(std::move(w));
  }
  if (spec.rfind("csv:", 0) == 0) {
    return read_pmf_csv_file(spec.substr(4));
  }
  throw ParseError("unknown init spec '" + spec + "'");
}

abm::Placement parse_placement(const std::string& spec,
                               std::int64_t particles) {
  if (spec == "all-at-one") return abm::Placement::all_at_one(particles);
  if (spec == "even") return abm::Placement::even(particles);
  if (spec.rfind("counts:", 0) == 0) {
    std::vector<std::int64_t> counts;
    for (const auto& tok : split_str(spec.substr(7), ',')) {
      counts.push_back(static_cast<std::int64_t>(parse_double(tok)));
    }
    return abm::Placement::from_counts(std::move(counts));
  }
  throw ParseError("unknown placement '" + spec + "'");
}

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw ParseError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void emit_json(const std::string& path, const json& j) {
  Sink sink(path);
  sink.stream() << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// per-subcommand configs (JSON-round-trippable)
// ---------------------------------------------------------------------------

struct EquilibriumCfg {
  double mu = 1.0;
  int nmax = 100;
  std::string out = "-";
  std::string json_out = "-";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EquilibriumCfg, mu, nmax, out,
                                                json_out)

struct SolveCfg {
  double mu = 1.0;
  std::string init = "bernoulli";
  double t_end = 10.0;
  double dt = 0.01;
  int nmax = 100;
  int record_every = 1;
  std::string out = "-";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SolveCfg, mu, init, t_end, dt,
                                                nmax, record_every, out)

struct SimulateCfg {
  std::int64_t sites = 1000;
  std::int64_t particles = 1000;
  std::string placement = "even";
  double t_end = 10.0;
  std::string samples = "linspace:0:10:101";
  std::uint64_t seed = 0;  // 0 = unset; resolved against env default
  int replicates = 1;
  int jobs = 1;
  int nmax = 100;
  std::string out = "-";
  std::string json_out = "-";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateCfg, sites, particles,
                                                placement, t_end, samples,
                                                seed, replicates, jobs, nmax,
                                                out, json_out)

struct PgfCheckCfg {
  std::string trajectory;
  std::string times = "1,5";
  int grid = 16;
  std::string json_out = "-";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PgfCheckCfg, trajectory, times,
                                                grid, json_out)

struct RatesCfg {
  std::string trajectory;
  std::string target = "bernoulli";
  std::string window = "2:10";
  std::string model = "exp";
  std::string json_out = "-";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RatesCfg, trajectory, target,
                                                window, model, json_out)

struct ReproduceCfg {
  int figure = 0;
  double mu = 0.0;  // 0 = run every variant of the figure
  std::string outdir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ReproduceCfg, figure, mu,
                                                outdir, seed, jobs)

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_equilibrium(const EquilibriumCfg& cfg) {
  json meta{{"schema_version", kSchemaVersion}, {"mu", cfg.mu},
            {"nmax", cfg.nmax}};
  Pmf pmf = [&] {
    if (cfg.mu > 1.0) {
      Equilibrium eq = ztp_equilibrium(cfg.mu, cfg.nmax);
      meta["kind"] = "zero-truncated-poisson";
      meta["nu"] = eq.nu;
      return eq.pmf;
    }
    Equilibrium eq = bernoulli_equilibrium(cfg.mu, cfg.nmax);
    meta["kind"] = "bernoulli";
    return eq.pmf;
  }();
  {
    Sink sink(cfg.out);
    write_pmf_csv(sink.stream(), pmf);
  }
  emit_json(cfg.json_out, meta);
  return 0;
}

int cmd_solve(const SolveCfg& cfg) {
  if (cfg.mu > 1.0) {
    double nu = nu_of_mu(cfg.mu);
    double tail = ztp_tail_bound(nu, cfg.nmax);
    if (tail > 1e-10) {
      std::cerr << "warning: equilibrium tail mass beyond n_max = "
                << cfg.nmax << " is about " << format_double(tail)
                << "; increase --nmax\n";
    }
  }
  Pmf p0 = make_initial(cfg.init, cfg.mu, cfg.nmax);
  Trajectory traj = solve(p0, cfg.mu, cfg.t_end, cfg.dt, cfg.record_every);
  Sink sink(cfg.out);
  write_trajectory_csv(sink.stream(), traj);
  return 0;
}

struct ReplicateResult {
  std::vector<std::pair<double, Pmf>> samples;
  std::optional<double> termination;
  bool overflow = false;
};

std::vector<ReplicateResult> run_ensemble(const SimulateCfg& cfg,
                                          std::uint64_t seed_base,
                                          const std::vector<double>& samples) {
  std::vector<ReplicateResult> results(
      static_cast<std::size_t>(cfg.replicates));
  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int r = next.fetch_add(1);
      if (r >= cfg.replicates) break;
      abm::SplitMix64 rng(seed_base + static_cast<std::uint64_t>(r));
      abm::SiteState state = abm::init_state(
          cfg.sites, parse_placement(cfg.placement, cfg.particles));
      ReplicateResult res;
      res.samples = abm::run(state, cfg.t_end, samples, rng, cfg.nmax);
      if (state.terminated()) res.termination = state.time;
      for (std::int64_t occ : state.occupancy) {
        if (occ > cfg.nmax) res.overflow = true;
      }
      results[static_cast<std::size_t>(r)] = std::move(res);
    }
  };
  int jobs = std::max(1, std::min(cfg.jobs, cfg.replicates));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

int cmd_simulate(const SimulateCfg& cfg) {
  std::uint64_t seed = cfg.seed != 0 ? cfg.seed : default_seed();
  auto samples = parse_samples(cfg.samples);
  auto results = run_ensemble(cfg, seed, samples);

  {
    Sink sink(cfg.out);
    auto& os = sink.stream();
    os << "replicate,t,n,count\n";
    for (int r = 0; r < cfg.replicates; ++r) {
      const auto& res = results[static_cast<std::size_t>(r)];
      for (const auto& [t, pmf] : res.samples) {
        for (std::size_t n = 0; n < pmf.size(); ++n) {
          auto count = std::llround(pmf[n] * static_cast<double>(cfg.sites));
          if (count == 0) continue;
          os << r << ',' << format_double(t) << ',' << n << ',' << count
             << '\n';
        }
      }
    }
  }

  json terms = json::array();
  bool overflow = false;
  for (const auto& res : results) {
    terms.push_back(res.termination ? json(*res.termination) : json(nullptr));
    overflow = overflow || res.overflow;
  }
  emit_json(cfg.json_out,
            json{{"schema_version", kSchemaVersion},
                 {"sites", cfg.sites},
                 {"particles", cfg.particles},
                 {"seed", seed},
                 {"replicates", cfg.replicates},
                 {"mean_occupancy", static_cast<double>(cfg.particles) /
                                        static_cast<double>(cfg.sites)},
                 {"termination_times", terms},
                 {"overflow", overflow}});
  return 0;
}

int cmd_pgf_check(const PgfCheckCfg& cfg) {
  Trajectory traj = read_trajectory_csv_file(cfg.trajectory);
  AuxiliarySolution aux = v_from_trajectory(traj);
  auto vres = volterra_residual(traj, aux);
  double max_volterra = 0.0;
  for (double r : vres) max_volterra = std::max(max_volterra, r);

  double max_pgf = 0.0;
  const Pmf& p0 = traj.states.front();
  for (double t : parse_double_list(cfg.times)) {
    std::size_t idx = 0;
    {
      double d = traj.uniform_spacing();
      idx = static_cast<std::size_t>(std::llround(t / d));
      if (idx >= traj.size()) throw OffGrid("pgf-check time beyond grid");
    }
    for (int j = 0; j < cfg.grid; ++j) {
      double theta = 2.0 * M_PI * j / cfg.grid;
      std::complex<double> w(std::cos(theta), std::sin(theta));
      std::complex<double> z = 1.0 - w;
      std::complex<double> direct = pgf_eval(traj.states[idx], w);
      std::complex<double> viaformula = explicit_pgf(t, z, p0, aux);
      max_pgf = std::max(max_pgf, std::abs(viaformula - direct));
    }
  }

  json out{{"schema_version", kSchemaVersion},
           {"max_residual_volterra", max_volterra},
           {"max_residual_pgf", max_pgf},
           {"v_limit", aux.v_series.back()}};
  if (traj.mu > 1.0) {
    double nu = nu_of_mu(traj.mu);
    out["nu"] = nu;
    out["v_limit_error"] = std::abs(aux.v_series.back() - std::exp(nu));
  } else {
    out["nu"] = nullptr;
    out["v_limit_error"] = nullptr;
  }
  emit_json(cfg.json_out, out);
  return 0;
}

int cmd_rates(const RatesCfg& cfg) {
  Trajectory traj = read_trajectory_csv_file(cfg.trajectory);
  double mu = traj.mu;
  int n_max = static_cast<int>(traj.states.front().n_max());

  Pmf target = [&] {
    if (cfg.target == "bernoulli") return bernoulli_equilibrium(mu, n_max).pmf;
    if (cfg.target == "ztp") return ztp_equilibrium(mu, n_max).pmf;
    throw ParseError("target must be bernoulli or ztp");
  }();

  std::vector<double> dist(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    dist[i] = ell1_dist(traj.states[i], target);
  }
  auto [lo, hi] = parse_window(cfg.window);
  DecayModel model = [&] {
    if (cfg.model == "exp") return DecayModel::PureExponential;
    if (cfg.model == "exp-poly") return DecayModel::ExponentialTimesPower;
    throw ParseError("model must be exp or exp-poly");
  }();
  RateFit fit = fit_decay(traj.times, dist, lo, hi, model);

  json out{{"schema_version", kSchemaVersion},
           {"rate", fit.rate},
           {"rmse", fit.rmse},
           {"n_used", fit.n_used},
           {"window", {fit.t_lo, fit.t_hi}},
           {"model", cfg.model}};
  if (model == DecayModel::ExponentialTimesPower) out["power"] = fit.power;
  if (cfg.target == "bernoulli") {
    if (mu < 1.0) {
      out["theory_rate"] = 2.0 * (1.0 - mu);
      out["ratio"] = fit.rate / (2.0 * (1.0 - mu));
    } else {
      out["theory_rate"] = nullptr;  // critical case decays like 1/t
      out["ratio"] = nullptr;
    }
  } else {
    double nu = nu_of_mu(mu);
    double proven = std::min(1.0, nu);
    out["theory_rate"] = proven;
    out["conjectured_rate"] = std::min(2.0, nu);
    out["ratio"] = fit.rate / proven;
  }
  emit_json(cfg.json_out, out);
  return 0;
}

// --------------------------- reproduce ------------------------------------

struct Check {
  std::string name;
  double value;
  double threshold;
  std::string op;  // "<=" or ">="
  bool pass;
};

Check check_le(const std::string& name, double value, double threshold) {
  return {name, value, threshold, "<=", value <= threshold};
}
Check check_ge(const std::string& name, double value, double threshold) {
  return {name, value, threshold, ">=", value >= threshold};
}

int finish_figure(int figure, const std::vector<Check>& checks) {
  bool all = true;
  json jchecks = json::array();
  for (const auto& c : checks) {
    all = all && c.pass;
    jchecks.push_back(json{{"name", c.name},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"op", c.op},
                           {"pass", c.pass}});
  }
  std::cout << json{{"schema_version", kSchemaVersion},
                    {"figure", figure},
                    {"checks", jchecks},
                    {"pass", all}}
                   .dump(2)
            << '\n';
  return all ? 0 : 2;
}

void write_long_csv(const std::string& path,
                    const std::vector<std::pair<double, Pmf>>& samples,
                    std::int64_t sites) {
  std::ofstream os(path);
  os << "t,n,count\n";
  for (const auto& [t, pmf] : samples) {
    for (std::size_t n = 0; n < pmf.size(); ++n) {
      auto count = std::llround(pmf[n] * static_cast<double>(sites));
      if (count == 0) continue;
      os << format_double(t) << ',' << n << ',' << count << '\n';
    }
  }
}

int cmd_reproduce(const ReproduceCfg& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.outdir);
  std::uint64_t seed = cfg.seed != 0 ? cfg.seed : default_seed();
  auto path = [&](const std::string& name) {
    return (fs::path(cfg.outdir) / name).string();
  };
  auto want = [&](double mu) { return cfg.mu == 0.0 || cfg.mu == mu; };
  std::vector<Check> checks;

  switch (cfg.figure) {
    case 2: {
      // agent-based stackplots over the first ten time units
      std::vector<double> samples;
      for (int i = 0; i <= 100; ++i) samples.push_back(0.1 * i);
      if (want(0.8)) {
        abm::SplitMix64 rng(seed);
        auto state = abm::init_state(1000, abm::Placement::all_at_one(800));
        auto out = abm::run(state, 10.0, samples, rng, 1000);
        write_long_csv(path("fig2_abm_mu0.8.csv"), out, 1000);
      }
      if (want(2.0)) {
        abm::SplitMix64 rng(seed + 1000);
        auto state = abm::init_state(1000, abm::Placement::even(2000));
        auto out = abm::run(state, 10.0, samples, rng, 100);
        write_long_csv(path("fig2_abm_mu2.csv"), out, 1000);
        Pmf pbar = ztp_equilibrium(2.0, 100).pmf;
        checks.push_back(check_le("abm_mu2_l1_to_ztp_at_t10",
                                  ell1_dist(out.back().second, pbar), 0.1));
      }
      return finish_figure(2, checks);
    }
    case 3: {
      // terminal distributions at t = 200
      if (want(0.8)) {
        SimulateCfg sim;
        sim.sites = 1000;
        sim.particles = 800;
        sim.placement = "all-at-one";
        sim.t_end = 200.0;
        sim.replicates = 8;
        sim.jobs = cfg.jobs;
        sim.nmax = 1000;
        auto results = run_ensemble(sim, seed, {200.0});
        Pmf pstar = bernoulli_equilibrium(0.8, 1000).pmf;
        double worst_l1 = 0.0;
        double terminated = 0.0;
        for (const auto& res : results) {
          worst_l1 =
              std::max(worst_l1, ell1_dist(res.samples[0].second, pstar));
          if (res.termination) terminated += 1.0;
        }
        write_long_csv(path("fig3_abm_mu0.8_terminal.csv"),
                       results[0].samples, 1000);
        checks.push_back(check_ge("abm_mu0.8_replicates_terminated",
                                  terminated, 8.0));
        checks.push_back(
            check_le("abm_mu0.8_terminal_l1_to_bernoulli", worst_l1, 0.05));
      }
      if (want(2.0)) {
        std::vector<double> samples;
        for (int i = 0; i <= 300; ++i) samples.push_back(50.0 + 0.5 * i);
        abm::SplitMix64 rng(seed + 7);
        auto state = abm::init_state(1000, abm::Placement::even(2000));
        auto out = abm::run(state, 200.0, samples, rng, 100);
        std::vector<double> avg(101, 0.0);
        for (const auto& [t, pmf] : out) {
          for (std::size_t n = 0; n < pmf.size(); ++n) avg[n] += pmf[n];
        }
        for (double& x : avg) x /= static_cast<double>(out.size());
        Pmf avg_pmf = make_pmf(avg, true);
        write_long_csv(path("fig3_abm_mu2_terminal.csv"),
                       {{200.0, out.back().second}}, 1000);
        Pmf pbar = ztp_equilibrium(2.0, 100).pmf;
        checks.push_back(check_le("abm_mu2_timeavg_l1_to_ztp",
                                  ell1_dist(avg_pmf, pbar), 0.08));
      }
      return finish_figure(3, checks);
    }
    case 4: {
      // ODE stackplots over the first ten time units
      if (want(0.8)) {
        Pmf p0 = make_initial("split:100:0.008", 0.8, 100);
        Trajectory traj = solve(p0, 0.8, 10.0, 0.01, 10);
        std::ofstream os(path("fig4_ode_mu0.8.csv"));
        write_trajectory_csv(os, traj);
        Pmf pstar = bernoulli_equilibrium(0.8, 100).pmf;
        checks.push_back(check_le("ode_mu0.8_l1_at_t10",
                                  ell1_dist(traj.states.back(), pstar), 0.02));
      }
      if (want(2.0)) {
        Pmf p0 = make_initial("delta:2", 2.0, 100);
        Trajectory traj = solve(p0, 2.0, 10.0, 0.01, 10);
        std::ofstream os(path("fig4_ode_mu2.csv"));
        write_trajectory_csv(os, traj);
        Pmf pbar = ztp_equilibrium(2.0, 100).pmf;
        checks.push_back(check_le("ode_mu2_l1_at_t10",
                                  ell1_dist(traj.states.back(), pbar), 1e-4));
      }
      return finish_figure(4, checks);
    }
    case 5: {
      // energy decay; the asymptotic-rate gate fits on [8, 20] where the
      // n^2-weighted transient has cleared
      if (want(0.8)) {
        Pmf p0 = make_initial("split:100:0.008", 0.8, 100);
        Trajectory traj = solve(p0, 0.8, 20.0, 0.01, 10);
        std::ofstream os(path("fig5_energy_mu0.8.csv"));
        os << "t,energy\n";
        for (std::size_t i = 0; i < traj.size(); ++i) {
          os << format_double(traj.times[i]) << ','
             << format_double(traj.energy_series[i]) << '\n';
        }
        RateFit fit = fit_decay(traj.times, traj.energy_series, 8.0, 20.0);
        checks.push_back(check_ge("energy_rate_mu0.8", fit.rate, 0.36));
        checks.push_back(check_le("energy_rate_mu0.8_hi", fit.rate, 0.44));
      }
      if (want(1.0)) {
        Pmf p0 = make_initial("split:100:0.01", 1.0, 100);
        Trajectory traj = solve(p0, 1.0, 20.0, 0.01, 10);
        std::ofstream os(path("fig5_energy_mu1.csv"));
        os << "t,energy\n";
        for (std::size_t i = 0; i < traj.size(); ++i) {
          os << format_double(traj.times[i]) << ','
             << format_double(traj.energy_series[i]) << '\n';
        }
        // algebraic bound from the critical-case energy estimate
        double p00 = p0[0];
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
          double t = traj.times[i];
          double bound = traj.energy_series[0] * std::exp(-2.0 * t) +
                         4.0 / (t + 2.0 / p00) + 2.0 * p00 * std::exp(-t);
          worst = std::max(worst, traj.energy_series[i] - bound);
        }
        checks.push_back(check_le("energy_bound_mu1_excess", worst, 0.0));
      }
      return finish_figure(5, checks);
    }
    case 6: {
      // l1 error curves for nu in {0.5, 1, 1.5, 2, 2.5, 3}
      for (double nu_target : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        double mu = nu_target / (-std::expm1(-nu_target));
        if (!(cfg.mu == 0.0 || std::abs(cfg.mu - mu) < 1e-9)) continue;
        int n_init = std::max(2, static_cast<int>(std::ceil(mu)));
        double mass = mu / n_init;
        std::ostringstream init;
        init << "split:" << n_init << ":" << format_double(mass);
        Pmf p0 = make_initial(init.str(), mu, 140);
        Trajectory traj = solve(p0, mu, 16.0, 0.01, 10);
        Pmf pbar = ztp_equilibrium(mu, 140).pmf;
        std::vector<double> dist(traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i) {
          dist[i] = ell1_dist(traj.states[i], pbar);
        }
        std::ostringstream fname;
        fname << "fig6_l1_nu" << format_double(nu_target) << ".csv";
        std::ofstream os(path(fname.str()));
        os << "t,l1\n";
        for (std::size_t i = 0; i < traj.size(); ++i) {
          os << format_double(traj.times[i]) << ',' << format_double(dist[i])
             << '\n';
        }
        RateFit fit = fit_decay(traj.times, dist, 2.0, 10.0);
        std::ostringstream cname;
        cname << "l1_rate_nu" << format_double(nu_target);
        checks.push_back(check_ge(cname.str(), fit.rate,
                                  0.95 * std::min(1.0, nu_target)));
      }
      return finish_figure(6, checks);
    }
    default:
      throw OutOfDomain("figure must be one of 2, 3, 4, 5, 6");
  }
}

// ---------------------------------------------------------------------------
// config plumbing: defaults <- --config file <- explicit flags
// ---------------------------------------------------------------------------

// Pre-scan argv for "--config <path>" / "--config=<path>" so the file can
// seed the defaults before CLI11 applies explicit flags on top.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

template <class Cfg>
void seed_from_config(const std::string& path, Cfg& cfg) {
  if (path.empty()) return;
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open config " + path);
  json j = json::parse(f);
  cfg = j.get<Cfg>();
}

template <class Cfg>
int maybe_dump(bool dump, const Cfg& cfg) {
  if (!dump) return -1;
  std::cout << json(cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dispersion process laboratory"};
  app.require_subcommand(1);

  std::string config_path = find_config_arg(argc, argv);
  bool dump = false;

  EquilibriumCfg eq_cfg;
  SolveCfg solve_cfg;
  SimulateCfg sim_cfg;
  PgfCheckCfg pgf_cfg;
  RatesCfg rates_cfg;
  ReproduceCfg rep_cfg;

  try {
    if (argc > 1) {
      std::string sub = argv[1];
      if (sub == "equilibrium") seed_from_config(config_path, eq_cfg);
      if (sub == "solve") seed_from_config(config_path, solve_cfg);
      if (sub == "simulate") seed_from_config(config_path, sim_cfg);
      if (sub == "pgf-check") seed_from_config(config_path, pgf_cfg);
      if (sub == "rates") seed_from_config(config_path, rates_cfg);
      if (sub == "reproduce") seed_from_config(config_path, rep_cfg);
    }

    auto add_common = [&](CLI::App* sub) {
      sub->add_option("--config", config_path,
                      "JSON config file (flags override it)");
      sub->add_flag("--dump-config", dump,
                    "print the effective config as JSON and exit");
    };

    auto* eq = app.add_subcommand("equilibrium",
                                  "closed-form equilibrium distribution");
    eq->add_option("--mu", eq_cfg.mu, "mean particles per site");
    eq->add_option("--nmax", eq_cfg.nmax, "truncation index");
    eq->add_option("--out", eq_cfg.out, "pmf CSV destination ('-' = stdout)");
    eq->add_option("--json", eq_cfg.json_out, "metadata JSON destination");
    add_common(eq);

    auto* sv = app.add_subcommand("solve", "integrate the truncated ODE");
    sv->add_option("--mu", solve_cfg.mu, "mean particles per site");
    sv->add_option("--init", solve_cfg.init,
                   "delta:<n> | bernoulli | ztp | csv:<path> | "
                   "split:<n>:<mass>");
    sv->add_option("--t-end", solve_cfg.t_end, "final time");
    sv->add_option("--dt", solve_cfg.dt, "step size");
    sv->add_option("--nmax", solve_cfg.nmax, "truncation index");
    sv->add_option("--record-every", solve_cfg.record_every,
                   "record every k-th step");
    sv->add_option("--out", solve_cfg.out, "trajectory CSV destination");
    add_common(sv);

    auto* sim = app.add_subcommand("simulate", "exact stochastic simulation");
    sim->add_option("--sites", sim_cfg.sites, "number of sites N");
    sim->add_option("--particles", sim_cfg.particles, "number of particles M");
    sim->add_option("--placement", sim_cfg.placement,
                    "all-at-one | even | counts:<c0,c1,...>");
    sim->add_option("--t-end", sim_cfg.t_end, "horizon");
    sim->add_option("--samples", sim_cfg.samples,
                    "comma list or linspace:<t0>:<t1>:<k>");
    sim->add_option("--seed", sim_cfg.seed,
                    "base seed (default env DISPERSION_LAB_SEED or 1)");
    sim->add_option("--replicates", sim_cfg.replicates, "replicate count");
    sim->add_option("--jobs", sim_cfg.jobs, "parallel replicate workers");
    sim->add_option("--nmax", sim_cfg.nmax, "empirical pmf truncation");
    sim->add_option("--out", sim_cfg.out, "long CSV destination");
    sim->add_option("--json", sim_cfg.json_out, "summary JSON destination");
    add_common(sim);

    auto* pc = app.add_subcommand("pgf-check",
                                  "generating-function diagnostics");
    pc->add_option("--trajectory", pgf_cfg.trajectory, "trajectory CSV")
        ->required();
    pc->add_option("--times", pgf_cfg.times, "comparison times");
    pc->add_option("--grid", pgf_cfg.grid, "unit-circle grid size");
    pc->add_option("--json", pgf_cfg.json_out, "report JSON destination");
    add_common(pc);

    auto* rt = app.add_subcommand("rates", "decay-rate estimation");
    rt->add_option("--trajectory", rates_cfg.trajectory, "trajectory CSV")
        ->required();
    rt->add_option("--target", rates_cfg.target, "bernoulli | ztp");
    rt->add_option("--window", rates_cfg.window, "fit window lo:hi");
    rt->add_option("--model", rates_cfg.model, "exp | exp-poly");
    rt->add_option("--json", rates_cfg.json_out, "report JSON destination");
    add_common(rt);

    auto* rp = app.add_subcommand("reproduce", "figure-style experiment");
    rp->add_option("figure", rep_cfg.figure, "figure number (2-6)")
        ->required();
    rp->add_option("--mu", rep_cfg.mu, "restrict to one mu variant");
    rp->add_option("--outdir", rep_cfg.outdir, "output directory");
    rp->add_option("--seed", rep_cfg.seed, "base seed");
    rp->add_option("--jobs", rep_cfg.jobs, "parallel replicate workers");
    add_common(rp);

    CLI11_PARSE(app, argc, argv);

    if (eq->parsed()) {
      int rc = maybe_dump(dump, eq_cfg);
      return rc >= 0 ? rc : cmd_equilibrium(eq_cfg);
    }
    if (sv->parsed()) {
      int rc = maybe_dump(dump, solve_cfg);
      return rc >= 0 ? rc : cmd_solve(solve_cfg);
    }
    if (sim->parsed()) {
      int rc = maybe_dump(dump, sim_cfg);
      return rc >= 0 ? rc : cmd_simulate(sim_cfg);
    }
    if (pc->parsed()) {
      int rc = maybe_dump(dump, pgf_cfg);
      return rc >= 0 ? rc : cmd_pgf_check(pgf_cfg);
    }
    if (rt->parsed()) {
      int rc = maybe_dump(dump, rates_cfg);
      return rc >= 0 ? rc : cmd_rates(rates_cfg);
    }
    if (rp->parsed()) {
      int rc = maybe_dump(dump, rep_cfg);
      return rc >= 0 ? rc : cmd_reproduce(rep_cfg);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << json{{"schema_version", kSchemaVersion},
                      {"error", {{"type", "validation"},
                                 {"message", e.what()}}}}
                     .dump(2)
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"schema_version", kSchemaVersion},
                      {"error", {{"type", "internal"},
                                 {"message", e.what()}}}}
                     .dump(2)
              << '\n';
    return 1;
  }
}

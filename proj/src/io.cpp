#include "dispersion/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace dispersion {

std::string format_double(double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("bad number: '" + std::string(s) + "'");
  }
  return x;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

// Reading skips the magnitude clamp so serialized tails round-trip
// bit-exactly; only the hard invariants are enforced.
Pmf pmf_from_weights_loose(std::vector<double> w) {
  double sum = 0.0;
  for (double x : w) {
    if (x < -1e-15) throw NegativeWeight("negative weight in file");
    sum += x;
  }
  if (sum <= 0.0) throw ZeroMass("file holds no mass");
  if (std::abs(sum - 1.0) > 1e-6) {
    throw NotNormalized("file mass deviates from 1");
  }
  if (w.size() < 2) w.resize(2, 0.0);
  return Pmf::unchecked(std::move(w));
}

}  // namespace

void write_pmf_csv(std::ostream& os, const Pmf& p) {
  os << "n,p_n\n";
  for (std::size_t n = 0; n < p.size(); ++n) {
    os << n << ',' << format_double(p[n]) << '\n';
  }
}

Pmf read_pmf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != "n,p_n") {
    throw ParseError("expected header 'n,p_n'");
  }
  std::vector<double> w;
  while (std::getline(is, line)) {
    auto sv = strip_cr(line);
    if (sv.empty()) continue;
    auto fields = split(sv, ',');
    if (fields.size() != 2) throw ParseError("expected two columns");
    auto n = static_cast<std::size_t>(parse_double(fields[0]));
    if (n != w.size()) throw ParseError("indices must increase from 0");
    w.push_back(parse_double(fields[1]));
  }
  return pmf_from_weights_loose(std::move(w));
}

nlohmann::json pmf_to_json(const Pmf& p) {
  return nlohmann::json(p.weights());
}

Pmf pmf_from_json(const nlohmann::json& j) {
  return pmf_from_weights_loose(j.get<std::vector<double>>());
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t width = traj.states.empty() ? 0 : traj.states[0].size();
  os << "t,a,energy";
  for (std::size_t n = 0; n < width; ++n) os << ",p" << n;
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << format_double(traj.times[i]) << ',' << format_double(traj.a_series[i])
       << ',' << format_double(traj.energy_series[i]);
    for (std::size_t n = 0; n < width; ++n) {
      os << ',' << format_double(traj.states[i][n]);
    }
    os << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file");
  auto header = split(strip_cr(line), ',');
  if (header.size() < 4 || header[0] != "t" || header[1] != "a" ||
      header[2] != "energy" || header[3] != "p0") {
    throw ParseError("expected header 't,a,energy,p0,...'");
  }
  const std::size_t width = header.size() - 3;

  Trajectory traj;
  while (std::getline(is, line)) {
    auto sv = strip_cr(line);
    if (sv.empty()) continue;
    auto fields = split(sv, ',');
    if (fields.size() != header.size()) {
      throw ParseError("row width differs from header");
    }
    traj.times.push_back(parse_double(fields[0]));
    traj.a_series.push_back(parse_double(fields[1]));
    traj.energy_series.push_back(parse_double(fields[2]));
    std::vector<double> w(width);
    for (std::size_t n = 0; n < width; ++n) {
      w[n] = parse_double(fields[3 + n]);
    }
    traj.states.push_back(pmf_from_weights_loose(std::move(w)));
  }
  if (traj.states.empty()) throw ParseError("trajectory has no rows");
  traj.mu = moment(traj.states.front(), 1);
  return traj;
}

Pmf read_pmf_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return read_pmf_csv(f);
}

Trajectory read_trajectory_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return read_trajectory_csv(f);
}

}  // namespace dispersion

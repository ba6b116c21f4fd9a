#ifndef DISPERSION_IO_HPP_
#define DISPERSION_IO_HPP_

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dispersion/meanfield.hpp"
#include "dispersion/pmf.hpp"

namespace dispersion {

/// Shortest decimal representation that round-trips bit-exactly.
std::string format_double(double x);
double parse_double(std::string_view s);

/// Pmf as a two-column CSV "n,p_n".
void write_pmf_csv(std::ostream& os, const Pmf& p);
Pmf read_pmf_csv(std::istream& is);

nlohmann::json pmf_to_json(const Pmf& p);
Pmf pmf_from_json(const nlohmann::json& j);

/// Trajectory CSV with header "t,a,energy,p0,...,p{nmax}".
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

Pmf read_pmf_csv_file(const std::string& path);
Trajectory read_trajectory_csv_file(const std::string& path);

}  // namespace dispersion

#endif  // DISPERSION_IO_HPP_

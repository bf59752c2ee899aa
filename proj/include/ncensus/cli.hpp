#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ncensus/model.hpp"
#include "ncensus/stats.hpp"

namespace ncensus::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Runs `nodal-census <args...>` in-process. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Length literals: plain decimals, "inf", and multiples of pi such as
/// "40pi", "2pi/10", "pi/4", "0.5pi". Throws ConfigError.
double parse_length(std::string_view text);

/// Default latitude-longitude grid for degree l: about 10 nodes per local
/// wavelength, n_theta even and >= max(4l, 16), n_phi = 2 n_theta.
GridSpec default_sphere_grid(int degree);

/// Step plot of the CDF with a +-1 stderr band.
void write_step_svg(std::ostream& out, const EmpiricalCdf& cdf, const std::string& title);

}  // namespace ncensus::cli

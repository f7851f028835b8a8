/// @file plot_data.hpp
/// @brief Gnuplot-ready data emission: whitespace-separated columns with a
/// one-line header comment, one file per figure.
#pragma once

#include <filesystem>
#include <vector>

#include "qhw/fluid.hpp"
#include "qhw/stats.hpp"

namespace qhw {

/// Distances versus system size: columns n, ks_x, w1_x, ks_g, w1_g.
void write_distance_plot(const InterchangeReport& rep,
                         const std::filesystem::path& path);

/// Tail curves: columns s, diffusion tail, then one column per n (ascending).
/// An empty s-grid produces a header-only file.
void write_tail_plot(const InterchangeReport& rep,
                     const std::filesystem::path& path);

/// g along fluid trajectories: columns t, then one g column per trajectory.
void write_g_plot(const std::vector<FluidTrajectory>& trajectories, double dt,
                  const std::filesystem::path& path);

}  // namespace qhw

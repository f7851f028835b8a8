#include "qhw/plot_data.hpp"

#include <fstream>
#include <stdexcept>

#include "qhw/config.hpp"

namespace qhw {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

}  // namespace

void write_distance_plot(const InterchangeReport& rep,
                         const std::filesystem::path& path) {
  std::ofstream f = open_out(path);
  f << "# n ks_x w1_x ks_g w1_g\n";
  for (const auto& row : rep.rows)
    f << row.n << " " << fmt_double(row.ks_x) << " " << fmt_double(row.w1_x)
      << " " << fmt_double(row.ks_g) << " " << fmt_double(row.w1_g) << "\n";
}

void write_tail_plot(const InterchangeReport& rep,
                     const std::filesystem::path& path) {
  std::ofstream f = open_out(path);
  f << "# s diffusion";
  for (const auto& row : rep.rows) f << " n" << row.n;
  f << "\n";
  for (std::size_t j = 0; j < rep.s_grid.size(); ++j) {
    f << fmt_double(rep.s_grid[j]) << " "
      << fmt_double(rep.diffusion_tail[j]);
    for (const auto& row : rep.rows) f << " " << fmt_double(row.tail[j]);
    f << "\n";
  }
}

void write_g_plot(const std::vector<FluidTrajectory>& trajectories, double dt,
                  const std::filesystem::path& path) {
  std::ofstream f = open_out(path);
  f << "# t";
  for (std::size_t c = 0; c < trajectories.size(); ++c) f << " g" << c + 1;
  f << "\n";
  if (trajectories.empty()) return;
  const Eigen::Index rows = trajectories.front().g.size();
  for (Eigen::Index i = 0; i < rows; ++i) {
    f << fmt_double(i * dt);
    for (const auto& tr : trajectories)
      f << " " << fmt_double(i < tr.g.size() ? tr.g[i] : 0.0);
    f << "\n";
  }
}

}  // namespace qhw

// Regenerates the reference survival tables under data/stable/.  Each table
// holds (x, P(U >= x)) for one strictly stable law, tallied from 1e8 draws
// over a grid chosen from a 1e6-draw pilot sample.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gwdev/rng.hpp"
#include "gwdev/stable.hpp"

using namespace gwdev;

namespace {

std::vector<double> pilot_grid(const StableLaw& law, std::size_t n_pilot,
                               std::size_t n_grid) {
  std::vector<double> v(n_pilot);
  for (std::size_t i = 0; i < n_pilot; ++i) {
    RngStream rng = substream(0x9217u, i, 0);
    v[i] = law.sample(rng);
  }
  std::sort(v.begin(), v.end());
  // quantile grid, equal-probability spacing clipped away from the extremes
  std::vector<double> grid;
  grid.reserve(n_grid);
  const double p_lo = 2e-5, p_hi = 1.0 - 2e-5;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double p =
        p_lo + (p_hi - p_lo) * static_cast<double>(i) /
                   static_cast<double>(n_grid - 1);
    auto idx = static_cast<std::size_t>(p * static_cast<double>(n_pilot - 1));
    grid.push_back(v[idx]);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void make_table(double alpha, double skew, const std::string& dir) {
  const StableLaw law(alpha, skew);
  const auto grid = pilot_grid(law, 1000000, 512);
  constexpr std::int64_t kDraws = 100000000;
  std::vector<std::int64_t> bin(grid.size() + 1, 0);
  for (std::int64_t i = 0; i < kDraws; ++i) {
    RngStream rng = substream(0x7ab1e5u, static_cast<std::uint64_t>(i), 0);
    const double x = law.sample(rng);
    const auto j = static_cast<std::size_t>(
        std::upper_bound(grid.begin(), grid.end(), x) - grid.begin());
    ++bin[j];
  }
  // suffix counts: draws strictly above grid[j] land in bins j+1..end
  std::vector<std::int64_t> above(grid.size());
  std::int64_t acc = 0;
  for (std::size_t j = grid.size(); j-- > 0;) {
    acc += bin[j + 1];
    above[j] = acc;
  }
  const std::string path = dir + "/" + stable_table_name(alpha, skew);
  std::ofstream out(path);
  out << "x,sf\n";
  out.precision(12);
  for (std::size_t j = 0; j < grid.size(); ++j)
    out << grid[j] << ','
        << static_cast<double>(above[j]) / static_cast<double>(kDraws) << '\n';
  std::cout << "wrote " << path << " (" << grid.size() << " rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : GWDEV_DATA_DIR "/stable";
  make_table(1.0, 0.0, dir);
  make_table(1.5, 0.0, dir);
  make_table(1.5, -1.0, dir);
  make_table(0.5, 1.0, dir);
  return 0;
}

#pragma once

// Cell-level traffic dynamics under a triangular flow-density relation.
// Densities are per-class veh/km; a cell's send/receive amounts are in
// vehicles per step.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace splitflow {

struct FundamentalDiagram {
  double free_flow_speed = 0.0;       // km/h
  double congestion_wave_speed = 0.0; // km/h
  double capacity = 0.0;              // veh/h
  double jam_density = 0.0;           // veh/km

  double critical_density() const { return capacity / free_flow_speed; }
};

// Empty string when usable, else what is wrong.  The uncongested branch must
// hit capacity strictly below jam density.
inline std::string check(const FundamentalDiagram& fd) {
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!pos(fd.free_flow_speed)) return "free_flow_speed must be positive";
  if (!pos(fd.congestion_wave_speed)) return "congestion_wave_speed must be positive";
  if (!pos(fd.capacity)) return "capacity must be positive";
  if (!pos(fd.jam_density)) return "jam_density must be positive";
  if (!(fd.critical_density() < fd.jam_density))
    return "capacity/free_flow_speed must stay below jam_density";
  return {};
}

// Vehicles the cell offers downstream in one step, by class.  The total is
// min(v * rho, capacity) * dt, shared among classes by their density.
inline void sending(std::span<const double> density, const FundamentalDiagram& fd,
                    double dt, std::span<double> out) {
  double total = 0.0;
  for (double r : density) total += r;
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double vehicles = std::min(fd.free_flow_speed * total, fd.capacity) * dt;
  for (std::size_t c = 0; c < density.size(); ++c) out[c] = vehicles * density[c] / total;
}

inline std::vector<double> sending(std::span<const double> density,
                                   const FundamentalDiagram& fd, double dt) {
  std::vector<double> out(density.size());
  sending(density, fd, dt, out);
  return out;
}

// Vehicles the cell can accept in one step: min(capacity, w * (jam - rho)) * dt.
inline double receiving(std::span<const double> density, const FundamentalDiagram& fd,
                        double dt) {
  double total = 0.0;
  for (double r : density) total += r;
  const double flux =
      std::min(fd.capacity, fd.congestion_wave_speed * (fd.jam_density - total));
  return std::max(0.0, flux) * dt;
}

}  // namespace splitflow

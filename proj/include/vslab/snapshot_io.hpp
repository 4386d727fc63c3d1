#pragma once

#include <string>
#include <vector>

#include "vslab/fields.hpp"

namespace vslab {

// Binary snapshot: little-endian header {magic "VSF1", u32 Nx, u32 Nv,
// f64 Vmax, f64 t} followed by the flat f64 value array in row-major
// (x1,x2,v1,v2) order.
void write_snapshot(const std::string& path, const DistributionField& f);
DistributionField read_snapshot(const std::string& path);

// same layout with an extra leading f64 time index per frame, used for the
// extracted control
void write_control_snapshot(const std::string& path, const PhaseGrid& grid, const std::vector<real>& times,
                            const std::vector<std::vector<float>>& frames);

// CSV of a moment time series: t,mass,mom1,mom2,max|rho|
void write_moment_csv(const std::string& path, const std::vector<real>& times,
                      const std::vector<MomentRecord>& moments);

}  // namespace vslab

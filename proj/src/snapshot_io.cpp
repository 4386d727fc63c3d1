#include "vslab/snapshot_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace vslab {

namespace {

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void write_snapshot(const std::string& path, const DistributionField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw VslabError("write_snapshot: cannot open " + path);
    os.write("VSF1", 4);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.Nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.Nv));
    put<double>(os, f.grid.Vmax);
    put<double>(os, f.t);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!os) throw VslabError("write_snapshot: write failed on " + path);
}

DistributionField read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw VslabError("read_snapshot: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "VSF1", 4) != 0) throw VslabError("read_snapshot: bad magic in " + path);
    const auto nx = get<std::uint32_t>(is);
    const auto nv = get<std::uint32_t>(is);
    const auto vmax = get<double>(is);
    const auto t = get<double>(is);
    DistributionField f(PhaseGrid(static_cast<int>(nx), static_cast<int>(nv), vmax), t);
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw VslabError("read_snapshot: truncated file " + path);
    return f;
}

void write_control_snapshot(const std::string& path, const PhaseGrid& grid, const std::vector<real>& times,
                            const std::vector<std::vector<float>>& frames) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw VslabError("write_control_snapshot: cannot open " + path);
    os.write("VSF1", 4);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.Nx));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.Nv));
    put<double>(os, grid.Vmax);
    put<double>(os, static_cast<double>(times.size()));
    for (std::size_t k = 0; k < frames.size(); ++k) {
        put<double>(os, times[k]);
        std::vector<double> buf(frames[k].begin(), frames[k].end());
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
}

void write_moment_csv(const std::string& path, const std::vector<real>& times,
                      const std::vector<MomentRecord>& moments) {
    std::ofstream os(path);
    if (!os) throw VslabError("write_moment_csv: cannot open " + path);
    os << "t,mass,mom1,mom2,max_abs_rho\n";
    char line[256];
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", times[k], moments[k].mass,
                      moments[k].momentum.x, moments[k].momentum.y, moments[k].max_abs_rho);
        os << line;
    }
}

}  // namespace vslab

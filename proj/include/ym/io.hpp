#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ym/flow.hpp"
#include "ym/gauge_field.hpp"
#include "ym/moduli.hpp"

namespace ym {

// All reals are printed with 17 significant digits so round-trips are
// lossless at double precision.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Write-then-rename so partial output is never observed.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::BadArgument, "cannot open " + tmp + " for writing");
    os << content;
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Connection snapshot: {"N": int, "alpha": real, "beta": real,
//   "a_x": [[3 reals] x N^2], "a_y": same}, row-major sites.

inline std::string snapshot_to_json(const Connection& A) {
  std::ostringstream os;
  os << "{\n  \"N\": " << A.grid().n << ",\n  \"alpha\": " << format_real(A.base.alpha)
     << ",\n  \"beta\": " << format_real(A.base.beta) << ",\n";
  auto dump = [&](const Su2Field& f, const char* name) {
    os << "  \"" << name << "\": [";
    for (int i = 0; i < f.sites(); ++i) {
      const AlgebraElement v = f.at(i);
      os << (i ? "," : "") << "[" << format_real(v.i) << "," << format_real(v.j) << ","
         << format_real(v.k) << "]";
    }
    os << "]";
  };
  dump(A.a.x, "a_x");
  os << ",\n";
  dump(A.a.y, "a_y");
  os << "\n}\n";
  return os.str();
}

inline void save_snapshot(const Connection& A, const std::string& path) {
  atomic_write(path, snapshot_to_json(A));
}

inline Connection load_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::BadArgument, "cannot open snapshot " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::BadArgument, std::string("snapshot parse error: ") + e.what());
  }
  for (const char* key : {"N", "alpha", "beta", "a_x", "a_y"})
    if (!j.contains(key)) fail(ErrorCode::BadArgument, std::string("snapshot missing key ") + key);
  const int n = j["N"].get<int>();
  Grid g(n);
  Connection A(FlatBase(j["alpha"].get<double>(), j["beta"].get<double>()), g);
  auto load = [&](Su2Field& f, const char* name) {
    const auto& arr = j[name];
    if (!arr.is_array() || static_cast<int>(arr.size()) != g.sites())
      fail(ErrorCode::BadArgument, std::string("snapshot key ") + name + " has wrong length");
    for (int i = 0; i < g.sites(); ++i) {
      const auto& t = arr[i];
      if (!t.is_array() || t.size() != 3)
        fail(ErrorCode::BadArgument, std::string("snapshot key ") + name + " entry malformed");
      f.set(i, {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
    }
  };
  load(A.a.x, "a_x");
  load(A.a.y, "a_y");
  return A;
}

// ---------------------------------------------------------------------------
// CSV emitters.

inline std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "t,energy,grad_l2,slice_residual,dist_l2,arclength\n";
  for (const auto& s : traj.samples) {
    os << format_real(s.t) << "," << format_real(s.energy) << "," << format_real(s.grad_l2)
       << "," << format_real(s.slice_residual) << "," << format_real(s.dist_l2) << ","
       << format_real(s.arclength) << "\n";
  }
  return os.str();
}

inline std::string lambda_scan_csv(const LambdaScanResult& r) {
  std::ostringstream os;
  os << "t,curvature_norm,distance,alpha,beta\n";
  for (const auto& s : r.samples) {
    os << format_real(s.t) << "," << format_real(s.curvature_norm) << ","
       << format_real(s.distance) << "," << format_real(s.alpha) << "," << format_real(s.beta)
       << "\n";
  }
  return os.str();
}

inline std::string lambda_scan_summary_json(const LambdaScanResult& r) {
  std::ostringstream os;
  os << "{\"lambda\": " << format_real(r.lambda) << ", \"C\": " << format_real(r.C)
     << ", \"r2\": " << format_real(r.r2) << "}\n";
  return os.str();
}

inline std::string balancing_csv(const std::vector<std::vector<double>>& coords,
                                 const std::vector<std::vector<double>>& chis,
                                 const std::vector<double>& residuals) {
  std::ostringstream os;
  const size_t dim = coords.empty() ? 0 : coords.front().size();
  for (size_t i = 0; i < dim; ++i) os << "coord" << i << ",";
  for (size_t i = 0; i < dim; ++i) os << "chi" << i << ",";
  os << "residual\n";
  for (size_t r = 0; r < coords.size(); ++r) {
    for (double v : coords[r]) os << format_real(v) << ",";
    for (double v : chis[r]) os << format_real(v) << ",";
    os << format_real(residuals[r]) << "\n";
  }
  return os.str();
}

}  // namespace ym

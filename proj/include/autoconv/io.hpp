#pragma once

// File formats and configuration:
//   complex signal CSV  t,re,im            real signal CSV  t,value
//   kernel              kernel_re.csv / kernel_im.csv ((2N-1) x N matrices)
//                       + kernel.meta with "N=<int>"
//   design              CSV j,u,v,w + design.meta (n=, p=, knots=open_uniform)
//   metrics             CSV beta,iters,d,r,e2
//   report.meta         beta_star=, d=, r=, e2=, total_iters=, wall_seconds=
//   run config          line-oriented "key = value" with '#' comments
// All floating point values are written with 17 significant digits, so files
// round-trip bit-exactly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "autoconv/functionals.hpp"
#include "autoconv/kernel.hpp"
#include "autoconv/nurbs.hpp"
#include "autoconv/optimizer.hpp"
#include "autoconv/signal.hpp"

namespace autoconv {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

inline double parse_double(const std::string& tok, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != trim(tok).size() && used != tok.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw IoError(context + ": cannot parse number '" + tok + "'");
  }
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  return in;
}

// Recovers the nominal domain length from the last node coordinate; the
// libraries only use integer-length domains ([0,1] and [0,2]).
inline double infer_domain_length(double t_last) {
  const double rounded = std::round(t_last);
  if (rounded >= 1.0 && std::abs(t_last - rounded) <= 1e-9) return rounded;
  return t_last;
}

}  // namespace detail

// ---- signals ----

inline void save_complex_signal_csv(const std::filesystem::path& p, const ComplexSignal& f) {
  auto out = detail::open_out(p);
  out << "t,re,im\n";
  for (std::size_t i = 0; i < f.grid.count; ++i) {
    out << detail::fmt17(f.grid.node(i)) << ',' << detail::fmt17(f.values[i].real()) << ','
        << detail::fmt17(f.values[i].imag()) << '\n';
  }
}

inline ComplexSignal load_complex_signal_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "t,re,im") {
    throw IoError(p.string() + ": expected header 't,re,im'");
  }
  std::vector<cx> values;
  double t_last = 0.0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 3) throw IoError(p.string() + ": expected 3 columns");
    t_last = detail::parse_double(cols[0], p.string());
    values.emplace_back(detail::parse_double(cols[1], p.string()),
                        detail::parse_double(cols[2], p.string()));
  }
  if (values.size() < 2) throw IoError(p.string() + ": need at least 2 rows");
  const SampleGrid grid(values.size(), detail::infer_domain_length(t_last));
  return ComplexSignal(grid, std::move(values));
}

inline void save_real_signal_csv(const std::filesystem::path& p, const RealSignal& f) {
  auto out = detail::open_out(p);
  out << "t,value\n";
  for (std::size_t i = 0; i < f.grid.count; ++i) {
    out << detail::fmt17(f.grid.node(i)) << ',' << detail::fmt17(f.values[i]) << '\n';
  }
}

inline RealSignal load_real_signal_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "t,value") {
    throw IoError(p.string() + ": expected header 't,value'");
  }
  std::vector<double> values;
  double t_last = 0.0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 2) throw IoError(p.string() + ": expected 2 columns");
    t_last = detail::parse_double(cols[0], p.string());
    values.push_back(detail::parse_double(cols[1], p.string()));
  }
  if (values.size() < 2) throw IoError(p.string() + ": need at least 2 rows");
  const SampleGrid grid(values.size(), detail::infer_domain_length(t_last));
  return RealSignal(grid, std::move(values));
}

// ---- kernel ----

namespace detail {

inline void save_matrix_csv(const std::filesystem::path& p, const KernelGrid& k, bool real_part) {
  auto out = open_out(p);
  for (std::size_t m = 0; m < k.rows(); ++m) {
    for (std::size_t kk = 0; kk < k.cols(); ++kk) {
      if (kk) out << ',';
      out << fmt17(real_part ? k.at(m, kk).real() : k.at(m, kk).imag());
    }
    out << '\n';
  }
}

inline void load_matrix_csv(const std::filesystem::path& p, KernelGrid& k, bool real_part) {
  auto in = open_in(p);
  std::string line;
  std::size_t m = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (m >= k.rows()) throw IoError(p.string() + ": too many rows");
    const auto cols = split(line, ',');
    if (cols.size() != k.cols()) throw IoError(p.string() + ": wrong column count");
    for (std::size_t kk = 0; kk < k.cols(); ++kk) {
      const double v = parse_double(cols[kk], p.string());
      if (real_part) {
        k.at(m, kk) = cx(v, k.at(m, kk).imag());
      } else {
        k.at(m, kk) = cx(k.at(m, kk).real(), v);
      }
    }
    ++m;
  }
  if (m != k.rows()) throw IoError(p.string() + ": wrong row count");
}

}  // namespace detail

inline void save_kernel(const std::filesystem::path& dir, const KernelGrid& k) {
  std::filesystem::create_directories(dir);
  detail::save_matrix_csv(dir / "kernel_re.csv", k, true);
  detail::save_matrix_csv(dir / "kernel_im.csv", k, false);
  auto meta = detail::open_out(dir / "kernel.meta");
  meta << "N=" << k.grid_count << '\n';
}

// Loads and symmetrizes; entries outside the support parallelogram are dropped.
inline KernelGrid load_kernel(const std::filesystem::path& dir) {
  auto meta = detail::open_in(dir / "kernel.meta");
  std::string line;
  std::size_t n = 0;
  while (std::getline(meta, line)) {
    const auto t = detail::trim(line);
    if (t.rfind("N=", 0) == 0) n = static_cast<std::size_t>(std::stoull(t.substr(2)));
  }
  if (n < 2) throw IoError((dir / "kernel.meta").string() + ": missing or invalid N");
  KernelGrid k(n);
  detail::load_matrix_csv(dir / "kernel_re.csv", k, true);
  detail::load_matrix_csv(dir / "kernel_im.csv", k, false);
  return symmetrize_kernel(k);
}

// ---- designs ----

inline void save_design(const std::filesystem::path& csv_path, const NurbsDesign& d) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  auto out = detail::open_out(csv_path);
  out << "j,u,v,w\n";
  for (std::size_t j = 0; j < d.count(); ++j) {
    out << (j + 1) << ',' << detail::fmt17(d.u[j]) << ',' << detail::fmt17(d.v[j]) << ','
        << detail::fmt17(d.w[j]) << '\n';
  }
  auto meta = detail::open_out(csv_path.parent_path() / "design.meta");
  meta << "n=" << d.count() << '\n' << "p=" << d.knots.degree << '\n' << "knots=open_uniform\n";
}

inline NurbsDesign load_design(const std::filesystem::path& csv_path) {
  auto meta = detail::open_in(csv_path.parent_path() / "design.meta");
  std::string line;
  std::size_t n = 0, p = 0;
  bool open_uniform = false;
  while (std::getline(meta, line)) {
    const auto t = detail::trim(line);
    if (t.rfind("n=", 0) == 0) n = std::stoull(t.substr(2));
    if (t.rfind("p=", 0) == 0) p = std::stoull(t.substr(2));
    if (t == "knots=open_uniform") open_uniform = true;
  }
  if (n == 0 || !open_uniform) throw IoError("design.meta: missing n or unsupported knot family");

  auto in = detail::open_in(csv_path);
  if (!std::getline(in, line) || detail::trim(line) != "j,u,v,w") {
    throw IoError(csv_path.string() + ": expected header 'j,u,v,w'");
  }
  std::vector<double> u, v, w;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 4) throw IoError(csv_path.string() + ": expected 4 columns");
    u.push_back(detail::parse_double(cols[1], csv_path.string()));
    v.push_back(detail::parse_double(cols[2], csv_path.string()));
    w.push_back(detail::parse_double(cols[3], csv_path.string()));
  }
  if (u.size() != n) throw IoError(csv_path.string() + ": row count does not match design.meta");
  return NurbsDesign(std::move(u), std::move(v), std::move(w), open_uniform_knots(n, p));
}

// ---- metrics and reports ----

inline void save_metrics_csv(const std::filesystem::path& p,
                             const std::vector<ContinuationStep>& steps) {
  auto out = detail::open_out(p);
  out << "beta,iters,d,r,e2\n";
  for (const auto& s : steps) {
    out << detail::fmt17(s.beta) << ',' << s.iterations << ',' << detail::fmt17(s.d) << ','
        << detail::fmt17(s.r) << ',' << detail::fmt17(s.e2) << '\n';
  }
}

inline void save_report_meta(const std::filesystem::path& p, const SolveReport& report) {
  auto out = detail::open_out(p);
  out << "beta_star=" << detail::fmt17(report.beta_star) << '\n'
      << "d=" << detail::fmt17(report.best_d) << '\n'
      << "r=" << detail::fmt17(report.best_r) << '\n'
      << "e2=" << detail::fmt17(report.best_e2) << '\n'
      << "total_iters=" << report.total_iterations << '\n'
      << "wall_seconds=" << detail::fmt17(report.wall_seconds) << '\n';
}

namespace detail {

inline void save_polar_csv(const std::filesystem::path& p, const ComplexSignal& f,
                           const char* axis_name) {
  auto out = open_out(p);
  out << axis_name << ",re,im,amp,phase\n";
  const RealSignal amp = modulus(f);
  const RealSignal arg = phase(f);
  for (std::size_t i = 0; i < f.grid.count; ++i) {
    out << fmt17(f.grid.node(i)) << ',' << fmt17(f.values[i].real()) << ','
        << fmt17(f.values[i].imag()) << ',' << fmt17(amp.values[i]) << ','
        << fmt17(arg.values[i]) << '\n';
  }
}

}  // namespace detail

// Writes recon_x.csv, recon_y.csv, design.csv (+ design.meta), metrics.csv and
// report.meta for a finished solve.
inline void export_reconstruction(const SolveReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::save_polar_csv(dir / "recon_x.csv", report.best_signal, "t");
  detail::save_polar_csv(dir / "recon_y.csv", report.best_image, "s");
  save_design(dir / "design.csv", report.best_design);
  save_metrics_csv(dir / "metrics.csv", report.steps);
  save_report_meta(dir / "report.meta", report);
}

// ---- run configuration ----

struct RunConfig {
  DataMode mode = DataMode::PhaseOnly;
  std::string kernel_dir;
  std::string amp_file;
  std::string phase_file;
  std::string data_file;
  std::size_t n = 150;
  std::size_t p = 2;
  std::size_t grid_nodes = 1000;  // N
  double alpha = 1e-6;
  double beta0 = 100.0;
  double q = 0.25;
  double beta_min = 1e-6;
  double beta_P = 1.0;
  double beta_w = 1.0;
  double w0 = 10.0;
  double eps = 1e-10;
  int maxit = 10000;
  double tol_scale = 2000.0;
  double tol_floor = 1e-9;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

// Parses the line-oriented "key = value" format. Unknown keys and values
// outside their documented ranges are rejected with the offending line and
// key named; missing keys keep their defaults.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  const auto fail = [&](const std::string& what) {
    throw ConfigError("config line " + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + t + "'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty() || val.empty()) fail("empty key or value");

    const auto num = [&]() -> double {
      try {
        std::size_t used = 0;
        const double v = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument("trailing characters");
        return v;
      } catch (const std::exception&) {
        fail("key '" + key + "': cannot parse number '" + val + "'");
        return 0.0;
      }
    };
    const auto positive_int = [&](const char* what) -> std::size_t {
      const double v = num();
      if (v < 1.0 || v != std::floor(v)) fail("key '" + key + "': " + what);
      return static_cast<std::size_t>(v);
    };

    if (key == "mode") {
      if (val == "phase") {
        cfg.mode = DataMode::PhaseOnly;
      } else if (val == "full") {
        cfg.mode = DataMode::FullData;
      } else if (val == "phase_sign") {
        cfg.mode = DataMode::PhaseOnlySignEps;
      } else {
        fail("key 'mode': expected phase, full, or phase_sign");
      }
    } else if (key == "kernel_dir") {
      cfg.kernel_dir = val;
    } else if (key == "amp_file") {
      cfg.amp_file = val;
    } else if (key == "phase_file") {
      cfg.phase_file = val;
    } else if (key == "data_file") {
      cfg.data_file = val;
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else if (key == "n") {
      cfg.n = positive_int("expected a positive integer");
    } else if (key == "p") {
      cfg.p = positive_int("expected a positive integer");
    } else if (key == "N") {
      cfg.grid_nodes = positive_int("expected a positive integer");
      if (cfg.grid_nodes < 2) fail("key 'N': need N >= 2");
    } else if (key == "alpha") {
      cfg.alpha = num();
      if (cfg.alpha < 0.0) fail("key 'alpha': must be >= 0");
    } else if (key == "beta0") {
      cfg.beta0 = num();
      if (cfg.beta0 <= 0.0) fail("key 'beta0': must be > 0");
    } else if (key == "q") {
      cfg.q = num();
      if (cfg.q <= 0.0 || cfg.q >= 1.0) fail("key 'q': need 0 < q < 1");
    } else if (key == "beta_min") {
      cfg.beta_min = num();
      if (cfg.beta_min <= 0.0) fail("key 'beta_min': must be > 0");
    } else if (key == "beta_P") {
      cfg.beta_P = num();
      if (cfg.beta_P < 0.0) fail("key 'beta_P': must be >= 0");
    } else if (key == "beta_w") {
      cfg.beta_w = num();
      if (cfg.beta_w < 0.0) fail("key 'beta_w': must be >= 0");
    } else if (key == "w0") {
      cfg.w0 = num();
      if (cfg.w0 <= 0.0) fail("key 'w0': must be > 0");
    } else if (key == "eps") {
      cfg.eps = num();
      if (cfg.eps <= 0.0) fail("key 'eps': must be > 0");
    } else if (key == "maxit") {
      cfg.maxit = static_cast<int>(positive_int("expected a positive integer"));
    } else if (key == "tol_scale") {
      cfg.tol_scale = num();
      if (cfg.tol_scale <= 0.0) fail("key 'tol_scale': must be > 0");
    } else if (key == "tol_floor") {
      cfg.tol_floor = num();
      if (cfg.tol_floor <= 0.0) fail("key 'tol_floor': must be > 0");
    } else if (key == "seed") {
      const double v = num();
      if (v < 0.0 || v != std::floor(v)) fail("key 'seed': expected a nonnegative integer");
      cfg.seed = static_cast<std::uint64_t>(v);
    } else {
      fail("unknown key '" + key + "'");
    }
  }

  if (cfg.n < cfg.p + 1) {
    throw ConfigError("config: need n >= p+1 (n=" + std::to_string(cfg.n) +
                      ", p=" + std::to_string(cfg.p) + ")");
  }
  return cfg;
}

// Serializes a configuration in the same key = value format parse_config
// accepts, so effective settings can be echoed next to solver outputs.
inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "mode = "
      << (cfg.mode == DataMode::FullData
              ? "full"
              : (cfg.mode == DataMode::PhaseOnly ? "phase" : "phase_sign"))
      << '\n';
  if (!cfg.kernel_dir.empty()) out << "kernel_dir = " << cfg.kernel_dir << '\n';
  if (!cfg.amp_file.empty()) out << "amp_file = " << cfg.amp_file << '\n';
  if (!cfg.phase_file.empty()) out << "phase_file = " << cfg.phase_file << '\n';
  if (!cfg.data_file.empty()) out << "data_file = " << cfg.data_file << '\n';
  out << "n = " << cfg.n << '\n'
      << "p = " << cfg.p << '\n'
      << "N = " << cfg.grid_nodes << '\n'
      << "alpha = " << detail::fmt17(cfg.alpha) << '\n'
      << "beta0 = " << detail::fmt17(cfg.beta0) << '\n'
      << "q = " << detail::fmt17(cfg.q) << '\n'
      << "beta_min = " << detail::fmt17(cfg.beta_min) << '\n'
      << "beta_P = " << detail::fmt17(cfg.beta_P) << '\n'
      << "beta_w = " << detail::fmt17(cfg.beta_w) << '\n'
      << "w0 = " << detail::fmt17(cfg.w0) << '\n'
      << "eps = " << detail::fmt17(cfg.eps) << '\n'
      << "maxit = " << cfg.maxit << '\n'
      << "tol_scale = " << detail::fmt17(cfg.tol_scale) << '\n'
      << "tol_floor = " << detail::fmt17(cfg.tol_floor) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "out_dir = " << cfg.out_dir << '\n';
  return out.str();
}

// Loads a config file and verifies that every referenced input exists.
inline RunConfig load_config(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str());
  const auto must_exist = [](const std::string& path, const char* what) {
    if (!path.empty() && !std::filesystem::exists(path)) {
      throw ConfigError(std::string("config: ") + what + " '" + path + "' does not exist");
    }
  };
  if (!cfg.kernel_dir.empty()) must_exist(cfg.kernel_dir + "/kernel.meta", "kernel metadata");
  must_exist(cfg.amp_file, "amplitude data file");
  must_exist(cfg.phase_file, "phase data file");
  must_exist(cfg.data_file, "full data file");
  return cfg;
}

}  // namespace autoconv

#pragma once

// Text formats: problem files, trace files and rate report files.
// Reals are written with 17 significant digits so that they round-trip.
//
// Problem file:
//   n <int>
//   m <int>
//   seed <uint>
//   rows            followed by m lines of n reals
//   rhs             followed by one line of m reals
//   witness         followed by one line of n reals
//   x0              followed by one line of n reals

#include "dlfp/problem.hpp"
#include "dlfp/rates.hpp"
#include "dlfp/solver.hpp"

#include <fmt/format.h>

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dlfp {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_real(double v) { return fmt::format("{:.17g}", v); }

namespace detail {

inline void write_reals(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_real(v(i));
  os << '\n';
}

inline double parse_real(const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw FormatError("bad real '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad real '" + tok + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& tok) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("bad unsigned integer '" + tok + "'");
  }
  try {
    return std::stoull(tok);
  } catch (const std::logic_error&) {
    throw FormatError("bad unsigned integer '" + tok + "'");
  }
}

inline Vector read_reals(std::istream& is, Eigen::Index count, const char* what) {
  Vector v(count);
  std::string tok;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(is >> tok)) throw FormatError(std::string("problem file: truncated ") + what);
    v(i) = parse_real(tok);
  }
  return v;
}

}  // namespace detail

inline void write_problem(std::ostream& os, const ProblemInstance& p) {
  p.validate();
  os << "n " << p.A.cols() << '\n' << "m " << p.A.rows() << '\n' << "seed " << p.seed << '\n';
  os << "rows\n";
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) detail::write_reals(os, p.A.row(i).transpose());
  os << "rhs\n";
  detail::write_reals(os, p.b);
  os << "witness\n";
  detail::write_reals(os, p.witness);
  os << "x0\n";
  detail::write_reals(os, p.x0);
}

inline std::string problem_to_string(const ProblemInstance& p) {
  std::ostringstream os;
  write_problem(os, p);
  return os.str();
}

inline ProblemInstance read_problem(std::istream& is) {
  ProblemInstance p;
  Eigen::Index n = -1, m = -1;
  bool seen_rows = false, seen_rhs = false, seen_witness = false, seen_x0 = false, seen_seed = false;
  std::string key;
  auto need_dims = [&](const std::string& field) {
    if (n < 1 || m < 1) throw FormatError("problem file: '" + field + "' before n and m");
  };
  while (is >> key) {
    std::string tok;
    if (key == "n" || key == "m") {
      if (!(is >> tok)) throw FormatError("problem file: missing value for " + key);
      const auto v = static_cast<Eigen::Index>(detail::parse_uint(tok));
      if (v < 1) throw FormatError("problem file: " + key + " must be >= 1");
      (key == "n" ? n : m) = v;
    } else if (key == "seed") {
      if (!(is >> tok)) throw FormatError("problem file: missing seed");
      p.seed = detail::parse_uint(tok);
      seen_seed = true;
    } else if (key == "rows") {
      need_dims(key);
      p.A.resize(m, n);
      for (Eigen::Index i = 0; i < m; ++i) p.A.row(i) = detail::read_reals(is, n, "rows").transpose();
      seen_rows = true;
    } else if (key == "rhs") {
      need_dims(key);
      p.b = detail::read_reals(is, m, "rhs");
      seen_rhs = true;
    } else if (key == "witness") {
      need_dims(key);
      p.witness = detail::read_reals(is, n, "witness");
      seen_witness = true;
    } else if (key == "x0") {
      need_dims(key);
      p.x0 = detail::read_reals(is, n, "x0");
      seen_x0 = true;
    } else {
      throw FormatError("problem file: unknown field '" + key + "'");
    }
  }
  if (!(seen_rows && seen_rhs && seen_witness && seen_x0 && seen_seed)) {
    throw FormatError("problem file: missing one of rows/rhs/witness/x0/seed");
  }
  try {
    p.validate();
  } catch (const InvalidProblemError& e) {
    throw FormatError(std::string("problem file: ") + e.what());
  }
  return p;
}

inline ProblemInstance problem_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_problem(is);
}

inline constexpr const char* kTraceHeader = "k,max_prox_all,max_prox_block,step_norm,dist_witness,block_id,inner_size";

/// One record per iteration under a header row.
inline void write_trace(std::ostream& os, const IterateTrace& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.k << ',' << format_real(r.max_prox_all) << ',' << format_real(r.max_prox_block) << ','
       << format_real(r.step_norm) << ',' << format_real(r.dist_witness) << ',' << r.block_id << ','
       << r.inner_size << '\n';
  }
}

/// One line of a rate report file.
struct RateRecord {
  std::string method;
  Index m = 0;
  Index b = 0;
  Index t = 0;
  Index s = 0;
  double delta_r = 0.0;
  double Delta_r = 0.0;
  double kappa = 0.0;
  Provenance kappa_provenance = Provenance::Heuristic;
  double q_r = 0.0;
  double c_r = 0.0;
  double q_hat_empirical = 0.0;
};

inline constexpr const char* kRateHeader = "method,m,b,t,s,delta_r,Delta_r,kappa,kappa_provenance,q_r,c_r,q_hat_empirical";

inline void write_rate_records(std::ostream& os, const std::vector<RateRecord>& records) {
  os << kRateHeader << '\n';
  for (const auto& r : records) {
    os << '"' << r.method << '"' << ',' << r.m << ',' << r.b << ',' << r.t << ',' << r.s << ','
       << format_real(r.delta_r) << ',' << format_real(r.Delta_r) << ',' << format_real(r.kappa) << ','
       << to_string(r.kappa_provenance) << ',' << format_real(r.q_r) << ',' << format_real(r.c_r) << ','
       << format_real(r.q_hat_empirical) << '\n';
  }
}

}  // namespace dlfp

#pragma once

// CSV writers and a small header-checked reader. Every float is written
// with 17 significant digits so files round-trip exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsosim/composite.hpp"
#include "bsosim/floquet.hpp"
#include "bsosim/model.hpp"
#include "bsosim/semiclassical.hpp"
#include "bsosim/signal.hpp"

namespace bsosim::csv {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& cols) {
    ncols_ = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i)
      os_ << (i ? "," : "") << cols[i];
    os_ << '\n';
  }
  void row(const std::vector<double>& vals) {
    if (vals.size() != ncols_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < vals.size(); ++i)
      os_ << (i ? "," : "") << num(vals[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
  std::size_t ncols_ = 0;
};

inline std::vector<std::string> trajectory_header(int levels) {
  std::vector<std::string> h{"t"};
  for (int i = 0; i < levels; ++i) {
    h.push_back("re_c" + std::to_string(i));
    h.push_back("im_c" + std::to_string(i));
  }
  for (int i = 0; i < levels; ++i) h.push_back("pop" + std::to_string(i));
  return h;
}

template <int N>
void write_trajectory(std::ostream& os, const Trajectory<N>& tr) {
  Writer w(os);
  w.header(trajectory_header(N));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> r{tr.times[k]};
    for (int i = 0; i < N; ++i) {
      r.push_back(tr.states[k][i].real());
      r.push_back(tr.states[k][i].imag());
    }
    for (int i = 0; i < N; ++i) r.push_back(tr.states[k].population(i));
    w.row(r);
  }
}

/// t,residual[,analytic]
inline void write_residual(std::ostream& os, const TimeSeries& res,
                           const std::vector<double>* analytic = nullptr) {
  Writer w(os);
  if (analytic) {
    if (analytic->size() != res.size())
      throw std::invalid_argument("analytic column length mismatch");
    w.header({"t", "residual", "analytic"});
  } else {
    w.header({"t", "residual"});
  }
  for (std::size_t k = 0; k < res.size(); ++k) {
    if (analytic) w.row({res.t[k], res.y[k], (*analytic)[k]});
    else w.row({res.t[k], res.y[k]});
  }
}

inline void write_ladder(std::ostream& os,
                         const std::vector<HarmonicLadder>& ladders) {
  Writer w(os);
  w.header({"t", "n", "re_a", "im_a", "re_b", "im_b"});
  for (const auto& L : ladders)
    for (int n = -L.order; n <= L.order; ++n)
      w.row({L.t, static_cast<double>(n), L.a_at(n).real(), L.a_at(n).imag(),
             L.b_at(n).real(), L.b_at(n).imag()});
}

inline void write_scan(std::ostream& os, const GbsoScan& scan,
                       bool with_1w) {
  Writer w(os);
  std::vector<std::string> h{"tau", "gbso", "amp_2w", "phase_2w", "amp_4w",
                             "phase_4w"};
  if (with_1w) {
    h.push_back("amp_1w");
    h.push_back("phase_1w");
  }
  w.header(h);
  for (const auto& p : scan.points) {
    std::vector<double> r{p.tau, p.gbso, p.tone_2w.amplitude, p.tone_2w.phase,
                          p.tone_4w.amplitude, p.tone_4w.phase};
    if (with_1w) {
      r.push_back(p.tone_1w.amplitude);
      r.push_back(p.tone_1w.phase);
    }
    w.row(r);
  }
}

inline void write_spectrum(std::ostream& os, const Spectrum& sp) {
  Writer w(os);
  w.header({"freq", "power"});
  for (std::size_t k = 0; k < sp.freq.size(); ++k)
    w.row({sp.freq[k], sp.power[k]});
}

inline void write_populations(std::ostream& os, const PopulationSeries& ps) {
  Writer w(os);
  std::vector<std::string> h{"t"};
  for (std::size_t l = 0; l < ps.pop.size(); ++l)
    h.push_back("p" + std::to_string(l));
  h.push_back("norm");
  h.push_back("leakage");
  w.header(h);
  for (std::size_t k = 0; k < ps.t.size(); ++k) {
    std::vector<double> r{ps.t[k]};
    for (const auto& p : ps.pop) r.push_back(p[k]);
    r.push_back(ps.norm[k]);
    r.push_back(ps.leakage[k]);
    w.row(r);
  }
}

inline void write_triplets(std::ostream& os, const SparseH& H) {
  Writer w(os);
  w.header({"row", "col", "re", "im"});
  for (Eigen::Index k = 0; k < H.outerSize(); ++k)
    for (SparseH::InnerIterator it(H, k); it; ++it)
      w.row({static_cast<double>(it.row()), static_cast<double>(it.col()),
             it.value().real(), it.value().imag()});
}

// ---------------------------------------------------------------------------
// Reading back

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::out_of_range("csv: no column '" + name + "'");
  }
  std::vector<double> col(const std::string& name) const {
    const std::size_t i = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline Table read(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
  t.columns = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw std::runtime_error("csv: ragged row");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(std::stod(c));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("csv: cannot open " + path);
  return read(f);
}

/// Throws naming the first expected column that is missing.
inline void require_columns(const Table& t,
                            const std::vector<std::string>& expected) {
  for (const auto& e : expected) {
    bool found = false;
    for (const auto& c : t.columns) found = found || c == e;
    if (!found) {
      std::string all;
      for (const auto& x : expected) all += (all.empty() ? "" : ",") + x;
      throw std::runtime_error("csv: missing column '" + e + "' (expected " +
                               all + ")");
    }
  }
}

}  // namespace bsosim::csv

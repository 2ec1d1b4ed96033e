#include "cmsnb/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace cmsnb {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, long line,
                             const std::string& msg) {
  fail("parse", path + ":" + std::to_string(line) + ": " + msg);
}

long to_long(const std::string& s, const std::string& path, long line) {
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0')
    parse_fail(path, line, "expected an integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& path, long line) {
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    parse_fail(path, line, "expected a number, got '" + s + "'");
  return v;
}

struct CsvReader {
  std::string path;
  std::ifstream in;
  long line_no = 0;

  explicit CsvReader(const std::string& p) : path(p), in(p) {
    if (!in) fail("io", "cannot open " + p);
  }
  // next non-empty, non-comment row
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      fields = split(t, ',');
      return true;
    }
    return false;
  }
  void expect_header(const std::vector<std::string>& cols) {
    std::vector<std::string> f;
    if (!next(f)) fail("parse", path + ": empty file");
    if (f != cols) {
      std::string want;
      for (size_t k = 0; k < cols.size(); ++k)
        want += (k ? "," : "") + cols[k];
      parse_fail(path, line_no, "expected header '" + want + "'");
    }
  }
};

}  // namespace

PanelData load_panel(const std::string& counts_path,
                     const std::string& covariates_path,
                     const std::string& neighbors_path) {
  PanelData d;
  std::map<std::string, int> area_index;
  struct Row {
    int area;
    int week;
    long count;
    long line;
  };
  std::vector<Row> rows;
  int week_min = 0, week_max = 0;
  bool first = true;
  {
    CsvReader r(counts_path);
    r.expect_header({"area_id", "week", "count"});
    std::vector<std::string> f;
    while (r.next(f)) {
      if (f.size() != 3) parse_fail(counts_path, r.line_no, "expected 3 fields");
      auto it = area_index.find(f[0]);
      int ai;
      if (it == area_index.end()) {
        ai = static_cast<int>(d.area_ids.size());
        area_index.emplace(f[0], ai);
        d.area_ids.push_back(f[0]);
      } else {
        ai = it->second;
      }
      int wk = static_cast<int>(to_long(f[1], counts_path, r.line_no));
      long c = to_long(f[2], counts_path, r.line_no);
      if (c < 0) parse_fail(counts_path, r.line_no, "negative count for area '" + f[0] + "'");
      if (first) {
        week_min = week_max = wk;
        first = false;
      } else {
        week_min = std::min(week_min, wk);
        week_max = std::max(week_max, wk);
      }
      rows.push_back({ai, wk, c, r.line_no});
    }
  }
  if (rows.empty()) fail("parse", counts_path + ": no count rows");
  d.N = static_cast<int>(d.area_ids.size());
  d.T = week_max - week_min + 1;
  d.weeks.resize(d.T);
  for (int t = 0; t < d.T; ++t) d.weeks[t] = week_min + t;
  d.y.assign(static_cast<size_t>(d.N) * d.T, -1);
  for (const Row& r : rows) {
    const size_t c = static_cast<size_t>(r.area) * d.T + (r.week - week_min);
    if (d.y[c] != -1)
      parse_fail(counts_path, r.line,
                 "duplicate cell (" + d.area_ids[r.area] + ", week " +
                     std::to_string(r.week) + ")");
    d.y[c] = r.count;
  }
  for (int i = 0; i < d.N; ++i)
    for (int t = 0; t < d.T; ++t)
      if (d.y[static_cast<size_t>(i) * d.T + t] == -1)
        fail("parse", counts_path + ": missing cell (" + d.area_ids[i] +
                          ", week " + std::to_string(week_min + t) + ")");

  if (!covariates_path.empty()) {
    CsvReader r(covariates_path);
    r.expect_header({"area_id", "week", "name", "value"});
    std::map<std::string, int> cov_index;
    struct CRow {
      int area, week, cov;
      double value;
      long line;
    };
    std::vector<CRow> crows;
    std::vector<std::string> f;
    while (r.next(f)) {
      if (f.size() != 4) parse_fail(covariates_path, r.line_no, "expected 4 fields");
      auto it = area_index.find(f[0]);
      if (it == area_index.end())
        parse_fail(covariates_path, r.line_no, "unknown area id '" + f[0] + "'");
      int wk = static_cast<int>(to_long(f[1], covariates_path, r.line_no));
      if (wk < week_min || wk > week_max)
        parse_fail(covariates_path, r.line_no,
                   "week " + std::to_string(wk) + " outside the count range");
      auto ct = cov_index.find(f[2]);
      int ci;
      if (ct == cov_index.end()) {
        ci = static_cast<int>(d.x_names.size());
        cov_index.emplace(f[2], ci);
        d.x_names.push_back(f[2]);
      } else {
        ci = ct->second;
      }
      crows.push_back({it->second, wk - week_min, ci,
                       to_double(f[3], covariates_path, r.line_no), r.line_no});
    }
    const size_t Q = d.x_names.size();
    d.x.assign(static_cast<size_t>(d.N) * d.T * Q,
               std::numeric_limits<double>::quiet_NaN());
    for (const CRow& c : crows) {
      double& slot = d.x[(static_cast<size_t>(c.area) * d.T + c.week) * Q + c.cov];
      if (!std::isnan(slot))
        parse_fail(covariates_path, c.line,
                   "duplicate covariate cell (" + d.area_ids[c.area] + ", week " +
                       std::to_string(d.weeks[c.week]) + ", " + d.x_names[c.cov] + ")");
      slot = c.value;
    }
    for (int i = 0; i < d.N; ++i)
      for (int t = 0; t < d.T; ++t)
        for (size_t q = 0; q < Q; ++q)
          if (std::isnan(d.x[(static_cast<size_t>(i) * d.T + t) * Q + q]))
            fail("parse", covariates_path + ": missing covariate cell (" +
                              d.area_ids[i] + ", week " + std::to_string(d.weeks[t]) +
                              ", " + d.x_names[q] + ")");
    d.z_names = d.x_names;  // both parts see every column until split
    d.z = d.x;
  }

  if (!neighbors_path.empty()) {
    CsvReader r(neighbors_path);
    r.expect_header({"from_area", "to_area", "weight"});
    d.in_nbrs.assign(d.N, {});
    std::vector<std::string> f;
    while (r.next(f)) {
      if (f.size() != 3) parse_fail(neighbors_path, r.line_no, "expected 3 fields");
      auto fi = area_index.find(f[0]);
      auto ti = area_index.find(f[1]);
      if (fi == area_index.end())
        parse_fail(neighbors_path, r.line_no, "unknown area id '" + f[0] + "'");
      if (ti == area_index.end())
        parse_fail(neighbors_path, r.line_no, "unknown area id '" + f[1] + "'");
      if (fi->second == ti->second)
        parse_fail(neighbors_path, r.line_no, "self edge on '" + f[0] + "'");
      double w = to_double(f[2], neighbors_path, r.line_no);
      if (!(w >= 0.0) || !std::isfinite(w))
        parse_fail(neighbors_path, r.line_no, "weight must be finite and >= 0");
      if (w == 0.0) continue;  // contributes nothing
      for (const auto& e : d.in_nbrs[ti->second])
        if (e.j == fi->second)
          parse_fail(neighbors_path, r.line_no,
                     "duplicate edge " + f[0] + " -> " + f[1]);
      d.in_nbrs[ti->second].push_back({fi->second, w});
    }
    for (auto& v : d.in_nbrs)
      std::sort(v.begin(), v.end(),
                [](const PanelData::Edge& a, const PanelData::Edge& b) {
                  return a.j < b.j;
                });
  } else {
    d.in_nbrs.assign(d.N, {});
  }
  d.build_rev_nbrs();
  return d;
}

void split_covariates(PanelData& data, const std::vector<std::string>& x_cols,
                      const std::vector<std::string>& z_cols) {
  const std::vector<std::string> all = data.x_names;
  const std::vector<double> full = data.x;
  const size_t Q = all.size();
  auto build = [&](const std::vector<std::string>& keep,
                   std::vector<std::string>& names, std::vector<double>& mat) {
    std::vector<size_t> idx;
    for (const auto& n : keep) {
      auto it = std::find(all.begin(), all.end(), n);
      if (it == all.end()) fail("config", "unknown covariate '" + n + "'");
      idx.push_back(static_cast<size_t>(it - all.begin()));
    }
    names = keep;
    mat.resize(static_cast<size_t>(data.N) * data.T * keep.size());
    for (size_t cell = 0; cell < static_cast<size_t>(data.N) * data.T; ++cell)
      for (size_t q = 0; q < idx.size(); ++q)
        mat[cell * keep.size() + q] = full[cell * Q + idx[q]];
  };
  build(x_cols, data.x_names, data.x);
  build(z_cols, data.z_names, data.z);
}

void standardize_covariates(PanelData& data, std::vector<double>& x_mean,
                            std::vector<double>& x_sd,
                            std::vector<double>& z_mean,
                            std::vector<double>& z_sd) {
  auto run = [&](std::vector<double>& mat, const std::vector<std::string>& names,
                 std::vector<double>& means, std::vector<double>& sds) {
    const size_t Q = names.size();
    const size_t cells = static_cast<size_t>(data.N) * data.T;
    means.assign(Q, 0.0);
    sds.assign(Q, 0.0);
    for (size_t q = 0; q < Q; ++q) {
      bool constant = true;
      for (size_t c = 1; c < cells && constant; ++c)
        constant = mat[c * Q + q] == mat[q];
      double m = 0.0;
      for (size_t c = 0; c < cells; ++c) m += mat[c * Q + q];
      m /= cells;
      double v = 0.0;
      for (size_t c = 0; c < cells; ++c) {
        double dq = mat[c * Q + q] - m;
        v += dq * dq;
      }
      if (cells < 2 || constant || v == 0.0)
        fail("domain", "covariate '" + names[q] + "' is constant; cannot scale");
      double sd = std::sqrt(v / (cells - 1));
      for (size_t c = 0; c < cells; ++c) mat[c * Q + q] = (mat[c * Q + q] - m) / sd;
      means[q] = m;
      sds[q] = sd;
    }
  };
  run(data.x, data.x_names, x_mean, x_sd);
  run(data.z, data.z_names, z_mean, z_sd);
}

double bhattacharyya_weight(const std::vector<double>& p,
                            const std::vector<double>& q) {
  if (p.size() != q.size()) fail("domain", "distributions differ in length");
  double sp = 0.0, sq = 0.0, w = 0.0;
  for (size_t l = 0; l < p.size(); ++l) {
    if (p[l] < 0.0 || q[l] < 0.0) fail("domain", "negative probability");
    sp += p[l];
    sq += q[l];
    w += std::sqrt(p[l] * q[l]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    fail("domain", "distributions must sum to 1 within 1e-9");
  return w;
}

WeightTable neighbor_weights_from_patients(const std::string& patients_path,
                                           int k) {
  CsvReader r(patients_path);
  r.expect_header({"area_id", "neighborhood_id", "n"});
  std::map<std::string, int> area_index, hood_index;
  WeightTable wt;
  struct Cell {
    int area, hood;
    long n;
  };
  std::vector<Cell> cells;
  std::vector<std::string> f;
  long n_hoods = 0;
  while (r.next(f)) {
    if (f.size() != 3) parse_fail(patients_path, r.line_no, "expected 3 fields");
    auto ai = area_index.emplace(f[0], static_cast<int>(wt.area_ids.size()));
    if (ai.second) wt.area_ids.push_back(f[0]);
    auto hi = hood_index.emplace(f[1], static_cast<int>(n_hoods));
    if (hi.second) ++n_hoods;
    long n = to_long(f[2], patients_path, r.line_no);
    if (n < 0) parse_fail(patients_path, r.line_no, "negative patient count");
    cells.push_back({ai.first->second, hi.first->second, n});
  }
  const int N = static_cast<int>(wt.area_ids.size());
  if (N < 2) fail("domain", "need at least two areas to form weights");
  std::vector<std::vector<double>> prof(N, std::vector<double>(n_hoods, 0.0));
  for (const Cell& c : cells) prof[c.area][c.hood] += static_cast<double>(c.n);
  for (int i = 0; i < N; ++i) {
    double tot = 0.0;
    for (double v : prof[i]) tot += v;
    if (tot <= 0.0)
      fail("domain", "area '" + wt.area_ids[i] + "' has no sampled patients");
    for (double& v : prof[i]) v /= tot;
  }
  wt.in_nbrs.assign(N, {});
  const int keep = std::min(k, N - 1);
  for (int i = 0; i < N; ++i) {
    std::vector<PanelData::Edge> cand;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double w = 0.0;
      for (long l = 0; l < n_hoods; ++l) w += std::sqrt(prof[j][l] * prof[i][l]);
      cand.push_back({j, w});
    }
    std::sort(cand.begin(), cand.end(),
              [](const PanelData::Edge& a, const PanelData::Edge& b) {
                return a.w != b.w ? a.w > b.w : a.j < b.j;  // ties: smaller id
              });
    cand.resize(keep);
    std::sort(cand.begin(), cand.end(),
              [](const PanelData::Edge& a, const PanelData::Edge& b) {
                return a.j < b.j;
              });
    wt.in_nbrs[i] = std::move(cand);
  }
  return wt;
}

void apply_weights(PanelData& data, const WeightTable& wt) {
  std::map<std::string, int> panel_index;
  for (int i = 0; i < data.N; ++i) panel_index.emplace(data.area_ids[i], i);
  data.in_nbrs.assign(data.N, {});
  for (size_t i = 0; i < wt.area_ids.size(); ++i) {
    auto ti = panel_index.find(wt.area_ids[i]);
    if (ti == panel_index.end())
      fail("domain", "weight table area '" + wt.area_ids[i] + "' is not in the panel");
    for (const auto& e : wt.in_nbrs[i]) {
      auto fi = panel_index.find(wt.area_ids[e.j]);
      if (fi == panel_index.end())
        fail("domain", "weight table area '" + wt.area_ids[e.j] + "' is not in the panel");
      data.in_nbrs[ti->second].push_back({fi->second, e.w});
    }
  }
  for (auto& v : data.in_nbrs)
    std::sort(v.begin(), v.end(),
              [](const PanelData::Edge& a, const PanelData::Edge& b) {
                return a.j < b.j;
              });
  data.build_rev_nbrs();
}

// ---- atomic text output --------------------------------------------------------

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("io", "cannot write " + tmp);
    out << content;
    if (!out) fail("io", "short write on " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail("io", "cannot move " + tmp + " into place: " + ec.message());
}

void save_neighbors(const std::string& path, const WeightTable& wt) {
  std::string out = "from_area,to_area,weight\n";
  for (size_t i = 0; i < wt.area_ids.size(); ++i)
    for (const auto& e : wt.in_nbrs[i])
      out += wt.area_ids[e.j] + "," + wt.area_ids[i] + "," + format_g17(e.w) + "\n";
  write_text_atomic(path, out);
}

// ---- draw persistence ------------------------------------------------------------

namespace {

std::string join_csv(const std::vector<std::string>& v) {
  std::string out;
  for (size_t k = 0; k < v.size(); ++k) {
    if (v[k].find(',') != std::string::npos || v[k].find('\n') != std::string::npos)
      fail("io", "label '" + v[k] + "' cannot contain commas or newlines");
    out += (k ? "," : "") + v[k];
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t k = 0; k < v.size(); ++k)
    out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

std::string join_g17(const std::vector<double>& v) {
  std::string out;
  for (size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_g17(v[k]);
  return out;
}

struct Meta {
  std::map<std::string, std::string> kv;
  std::string path;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) fail("parse", path + ": missing key '" + key + "'");
    return it->second;
  }
  long num(const std::string& key) const {
    return to_long(get(key), path, 0);
  }
  double real(const std::string& key) const {
    return to_double(get(key), path, 0);
  }
  std::vector<std::string> list(const std::string& key) const {
    const std::string& s = get(key);
    if (s.empty()) return {};
    return split(s, ',');
  }
  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& f : list(key)) out.push_back(static_cast<int>(to_long(f, path, 0)));
    return out;
  }
  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& f : list(key)) out.push_back(to_double(f, path, 0));
    return out;
  }
};

Meta read_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  Meta m;
  m.path = path;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) fail("parse", path + ": expected key=value, got '" + t + "'");
    m.kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return m;
}

}  // namespace

void persist_draws(const PosteriorDraws& draws, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail("io", "cannot create " + dir + ": " + ec.message());

  const ModelSpec& sp = draws.spec;
  const SamplerConfig& cfg = draws.cfg;
  std::string meta;
  meta += "format=cmsnb-draws\nversion=1\n";
  meta += "chains=" + std::to_string(draws.chains.size()) + "\n";
  meta += "iters=" + std::to_string(cfg.iters) + "\n";
  meta += "burnin=" + std::to_string(cfg.burnin) + "\n";
  meta += "thin_states=" + std::to_string(cfg.thin_states) + "\n";
  meta += "seed=" + std::to_string(cfg.seed) + "\n";
  meta += "adapt_interval=" + std::to_string(cfg.adapt_interval) + "\n";
  meta += "adapt_target=" + format_g17(cfg.adapt_target) + "\n";
  meta += "init_stay=" + format_g17(cfg.init_stay) + "\n";
  meta += "max_init_tries=" + std::to_string(cfg.max_init_tries) + "\n";
  meta += "online_predictive=" + std::to_string(cfg.online_predictive ? 1 : 0) + "\n";
  meta += "threads=" + std::to_string(cfg.threads) + "\n";
  meta += "absence=" + std::to_string(sp.ss.absence ? 1 : 0) + "\n";
  meta += "m_en=" + std::to_string(sp.ss.m_en) + "\n";
  meta += "m_ob=" + std::to_string(sp.ss.m_ob) + "\n";
  meta += "random_intercepts=" + std::to_string(sp.random_intercepts ? 1 : 0) + "\n";
  meta += "share_r=" + std::to_string(sp.share_r ? 1 : 0) + "\n";
  meta += "x_en=" + join_ints(sp.x_en) + "\n";
  meta += "x_ob=" + join_ints(sp.x_ob) + "\n";
  meta += "z12=" + join_ints(sp.z12) + "\n";
  meta += "z21=" + join_ints(sp.z21) + "\n";
  meta += "z23=" + join_ints(sp.z23) + "\n";
  meta += "z33=" + join_ints(sp.z33) + "\n";
  meta += "couple12=" + std::to_string(sp.couple12 ? 1 : 0) + "\n";
  meta += "couple21=" + std::to_string(sp.couple21 ? 1 : 0) + "\n";
  meta += "couple23=" + std::to_string(sp.couple23 ? 1 : 0) + "\n";
  meta += "couple33=" + std::to_string(sp.couple33 ? 1 : 0) + "\n";
  meta += "eps_rate=" + format_g17(sp.eps_rate) + "\n";
  meta += "eps_rho=" + format_g17(sp.eps_rho) + "\n";
  meta += "weak_constraints=" + std::to_string(sp.weak_constraints ? 1 : 0) + "\n";
  meta += "eps_weak=" + format_g17(sp.eps_weak) + "\n";
  meta += "area_ids=" + join_csv(draws.area_ids) + "\n";
  meta += "weeks=" + join_ints(draws.weeks) + "\n";
  meta += "x_names=" + join_csv(draws.x_names) + "\n";
  meta += "z_names=" + join_csv(draws.z_names) + "\n";
  meta += "x_mean=" + join_g17(draws.x_mean) + "\n";
  meta += "x_sd=" + join_g17(draws.x_sd) + "\n";
  meta += "z_mean=" + join_g17(draws.z_mean) + "\n";
  meta += "z_sd=" + join_g17(draws.z_sd) + "\n";
  meta += "names=" + join_csv(draws.names) + "\n";
  for (size_t c = 0; c < draws.chains.size(); ++c)
    meta += "final_loglik_chain" + std::to_string(c) + "=" +
            format_g17(draws.chains[c].final_loglik) + "\n";
  write_text_atomic(dir + "/meta.txt", meta);

  const int P = draws.P();
  for (size_t c = 0; c < draws.chains.size(); ++c) {
    const ChainDraws& ch = draws.chains[c];
    const std::string tag = std::to_string(c);
    {
      std::string out = join_csv(draws.names) + "\n";
      out.reserve(out.size() + static_cast<size_t>(ch.n_kept) * P * 20);
      for (long d = 0; d < ch.n_kept; ++d) {
        for (int k = 0; k < P; ++k)
          out += (k ? "," : "") + format_g17(ch.at(d, k, P));
        out += "\n";
      }
      write_text_atomic(dir + "/params_chain" + tag + ".csv", out);
    }
    {
      std::string out = "cmsnb-states 1 " + std::to_string(ch.n_state_draws) + " " +
                        std::to_string(draws.N()) + " " + std::to_string(draws.T()) +
                        " " + std::to_string(sp.ss.K()) + "\n";
      out.append(reinterpret_cast<const char*>(ch.states.data()), ch.states.size());
      write_text_atomic(dir + "/states_chain" + tag + ".bin", out);
    }
    {
      std::string out = "name,accept_rate,prop_sd\n";
      for (int k = 0; k < P; ++k)
        out += draws.names[k] + "," + format_g17(ch.accept_rate[k]) + "," +
               format_g17(ch.prop_sd[k]) + "\n";
      write_text_atomic(dir + "/adapt_chain" + tag + ".csv", out);
    }
    if (!ch.pred.empty()) {
      std::string out = "n=" + std::to_string(ch.pred.n) + "\n";
      out += "lse,mean,m2\n";
      for (size_t q = 0; q < ch.pred.lse.size(); ++q)
        out += format_g17(ch.pred.lse[q]) + "," + format_g17(ch.pred.mean[q]) +
               "," + format_g17(ch.pred.m2[q]) + "\n";
      write_text_atomic(dir + "/pred_chain" + tag + ".csv", out);
    }
  }
}

PosteriorDraws load_draws(const std::string& dir) {
  Meta m = read_meta(dir + "/meta.txt");
  if (m.get("format") != "cmsnb-draws")
    fail("parse", dir + "/meta.txt: not a draws directory");
  if (m.num("version") != 1)
    fail("parse", dir + "/meta.txt: unsupported version " + m.get("version"));

  PosteriorDraws dr;
  ModelSpec& sp = dr.spec;
  SamplerConfig& cfg = dr.cfg;
  cfg.iters = m.num("iters");
  cfg.burnin = m.num("burnin");
  cfg.thin_states = static_cast<int>(m.num("thin_states"));
  cfg.seed = static_cast<std::uint64_t>(m.num("seed"));
  cfg.adapt_interval = static_cast<int>(m.num("adapt_interval"));
  cfg.adapt_target = m.real("adapt_target");
  cfg.init_stay = m.real("init_stay");
  cfg.max_init_tries = m.num("max_init_tries");
  cfg.online_predictive = m.num("online_predictive") != 0;
  cfg.threads = static_cast<int>(m.num("threads"));
  cfg.chains = static_cast<int>(m.num("chains"));
  sp.ss.absence = m.num("absence") != 0;
  sp.ss.m_en = static_cast<int>(m.num("m_en"));
  sp.ss.m_ob = static_cast<int>(m.num("m_ob"));
  sp.random_intercepts = m.num("random_intercepts") != 0;
  sp.share_r = m.num("share_r") != 0;
  sp.x_en = m.int_list("x_en");
  sp.x_ob = m.int_list("x_ob");
  sp.z12 = m.int_list("z12");
  sp.z21 = m.int_list("z21");
  sp.z23 = m.int_list("z23");
  sp.z33 = m.int_list("z33");
  sp.couple12 = m.num("couple12") != 0;
  sp.couple21 = m.num("couple21") != 0;
  sp.couple23 = m.num("couple23") != 0;
  sp.couple33 = m.num("couple33") != 0;
  sp.eps_rate = m.real("eps_rate");
  sp.eps_rho = m.real("eps_rho");
  sp.weak_constraints = m.num("weak_constraints") != 0;
  sp.eps_weak = m.real("eps_weak");
  dr.area_ids = m.list("area_ids");
  dr.weeks = m.int_list("weeks");
  dr.x_names = m.list("x_names");
  dr.z_names = m.list("z_names");
  dr.x_mean = m.real_list("x_mean");
  dr.x_sd = m.real_list("x_sd");
  dr.z_mean = m.real_list("z_mean");
  dr.z_sd = m.real_list("z_sd");
  dr.names = m.list("names");

  const int P = dr.P();
  const int n_chains = cfg.chains;
  for (int c = 0; c < n_chains; ++c) {
    const std::string tag = std::to_string(c);
    ChainDraws ch;
    ch.final_loglik = m.real("final_loglik_chain" + tag);
    {
      const std::string path = dir + "/params_chain" + tag + ".csv";
      CsvReader r(path);
      r.expect_header(dr.names);
      std::vector<std::string> f;
      while (r.next(f)) {
        if (f.size() != static_cast<size_t>(P))
          parse_fail(path, r.line_no, "wrong column count");
        for (int k = 0; k < P; ++k)
          ch.params.push_back(to_double(f[k], path, r.line_no));
      }
      ch.n_kept = static_cast<long>(ch.params.size()) / P;
      if (ch.n_kept != cfg.n_kept())
        fail("parse", path + ": expected " + std::to_string(cfg.n_kept()) +
                          " rows, found " + std::to_string(ch.n_kept));
    }
    {
      const std::string path = dir + "/states_chain" + tag + ".bin";
      std::ifstream in(path, std::ios::binary);
      if (!in) fail("io", "cannot open " + path);
      std::string header;
      std::getline(in, header);
      std::istringstream hs(header);
      std::string magic;
      long ver = 0, nd = 0, n = 0, t = 0, kk = 0;
      hs >> magic >> ver >> nd >> n >> t >> kk;
      if (magic != "cmsnb-states" || ver != 1 || !hs)
        fail("parse", path + ": bad state file header");
      if (n != dr.N() || t != dr.T() || kk != sp.ss.K() || nd != cfg.n_state_draws())
        fail("parse", path + ": state dimensions disagree with meta.txt");
      ch.n_state_draws = nd;
      ch.states.resize(static_cast<size_t>(nd) * n * t);
      in.read(reinterpret_cast<char*>(ch.states.data()),
              static_cast<std::streamsize>(ch.states.size()));
      if (in.gcount() != static_cast<std::streamsize>(ch.states.size()))
        fail("parse", path + ": truncated state file");
    }
    {
      const std::string path = dir + "/adapt_chain" + tag + ".csv";
      CsvReader r(path);
      r.expect_header({"name", "accept_rate", "prop_sd"});
      std::vector<std::string> f;
      int k = 0;
      while (r.next(f)) {
        if (f.size() != 3 || k >= P || f[0] != dr.names[k])
          parse_fail(path, r.line_no, "row does not match parameter order");
        ch.accept_rate.push_back(to_double(f[1], path, r.line_no));
        ch.prop_sd.push_back(to_double(f[2], path, r.line_no));
        ++k;
      }
      if (k != P) fail("parse", path + ": missing parameter rows");
    }
    {
      const std::string path = dir + "/pred_chain" + tag + ".csv";
      std::ifstream probe(path);
      if (probe) {
        probe.close();
        CsvReader r(path);
        std::vector<std::string> f;
        if (!r.next(f) || f.size() != 1 || f[0].rfind("n=", 0) != 0)
          fail("parse", path + ": expected an n= line");
        ch.pred.init(dr.N(), dr.T());
        ch.pred.n = to_long(f[0].substr(2), path, r.line_no);
        r.expect_header({"lse", "mean", "m2"});
        size_t q = 0;
        const size_t cells = ch.pred.lse.size();
        while (r.next(f)) {
          if (f.size() != 3 || q >= cells)
            parse_fail(path, r.line_no, "unexpected accumulator row");
          ch.pred.lse[q] = to_double(f[0], path, r.line_no);
          ch.pred.mean[q] = to_double(f[1], path, r.line_no);
          ch.pred.m2[q] = to_double(f[2], path, r.line_no);
          ++q;
        }
        if (q != cells) fail("parse", path + ": truncated accumulator file");
      }
    }
    dr.chains.push_back(std::move(ch));
  }
  return dr;
}

}  // namespace cmsnb

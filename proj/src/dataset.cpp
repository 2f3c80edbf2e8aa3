#include "bds/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace bds {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  if (line.find('"') != std::string::npos)
    throw ValidationError("line " + std::to_string(line_no) +
                          ": quoting is not supported in these CSVs");
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          s + "'");
  }
}

long parse_count(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          s + "'");
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

void expect_header(const std::string& got, const std::string& want,
                   const std::string& path) {
  std::string g = got;
  if (!g.empty() && g.back() == '\r') g.pop_back();
  if (g != want)
    throw ValidationError(path + ": expected header '" + want + "', got '" + g + "'");
}

}  // namespace

const Eigen::VectorXd* CovariateTable::find(const std::string& patient_id) const {
  for (const auto& [id, z] : rows)
    if (id == patient_id) return &z;
  return nullptr;
}

long PanelDataset::n_intervals() const {
  long n = 0;
  for (const auto& p : patients) n += static_cast<long>(p.intervals.size());
  return n;
}

long PanelDataset::n_observations() const {
  long n = 0;
  for (const auto& p : patients)
    n += p.obs_times.empty() ? static_cast<long>(p.intervals.size()) + 1
                             : static_cast<long>(p.obs_times.size());
  return n;
}

long PanelDataset::n_changed_intervals() const {
  long n = 0;
  for (const auto& p : patients)
    for (const auto& iv : p.intervals)
      if (!iv.no_change()) ++n;
  return n;
}

long PanelDataset::max_count() const {
  long m = 0;
  for (const auto& p : patients)
    for (const auto& iv : p.intervals)
      m = std::max({m, iv.a, iv.b, iv.c_new});
  return m;
}

std::vector<GenotypeRow> read_genotype_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  expect_header(line, "patient_id,time,site_id", path);
  std::vector<GenotypeRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line, line_no);
    if (f.size() != 3)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields");
    if (f[0].empty() || f[2].empty())
      throw ValidationError("line " + std::to_string(line_no) +
                            ": empty patient_id or site_id");
    rows.push_back({f[0], parse_double(f[1], line_no, "time"), f[2], line_no});
  }
  return rows;
}

std::vector<ReducedRow> read_reduced_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  expect_header(line, "patient_id,t_start,t_end,a,b,c_new", path);
  std::vector<ReducedRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line, line_no);
    if (f.size() != 6)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 6 fields");
    ReducedRow r;
    r.patient_id = f[0];
    r.t_start = parse_double(f[1], line_no, "t_start");
    r.t_end = parse_double(f[2], line_no, "t_end");
    r.a = parse_count(f[3], line_no, "a");
    r.b = parse_count(f[4], line_no, "b");
    r.c_new = parse_count(f[5], line_no, "c_new");
    r.line = line_no;
    rows.push_back(std::move(r));
  }
  return rows;
}

CovariateTable read_covariates_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  auto header = split_csv_line(line, 1);
  if (header.size() < 2 || header[0] != "patient_id")
    throw ValidationError(path + ": header must be patient_id,<covariate names>");
  CovariateTable tab;
  tab.names.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line, line_no);
    if (f.size() != header.size())
      throw ValidationError("line " + std::to_string(line_no) +
                            ": covariate width mismatch (expected " +
                            std::to_string(header.size()) + " fields)");
    Eigen::VectorXd z(static_cast<long>(tab.names.size()));
    for (std::size_t i = 1; i < f.size(); ++i)
      z[static_cast<long>(i) - 1] = parse_double(f[i], line_no, "covariate");
    if (tab.find(f[0]))
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate covariate row for patient '" + f[0] + "'");
    tab.rows.push_back({f[0], std::move(z)});
  }
  return tab;
}

namespace {

Eigen::VectorXd covariates_for(const std::string& id, const CovariateTable* cov) {
  if (!cov) {
    Eigen::VectorXd z(1);
    z[0] = 1.0;
    return z;
  }
  const Eigen::VectorXd* row = cov->find(id);
  if (!row)
    throw ValidationError("patient '" + id + "' is missing from the covariates CSV");
  Eigen::VectorXd z(row->size() + 1);
  z[0] = 1.0;
  z.tail(row->size()) = *row;
  return z;
}

std::vector<std::string> names_with_intercept(const CovariateTable* cov) {
  std::vector<std::string> names{"1"};
  if (cov) names.insert(names.end(), cov->names.begin(), cov->names.end());
  return names;
}

}  // namespace

PanelDataset validate_dataset(const std::vector<GenotypeRow>& rows,
                              const CovariateTable* covariates) {
  // group contiguously: per patient, per time, collecting site sets
  struct Obs {
    double time;
    std::vector<std::string> sites;
    std::size_t line;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Obs>> by_patient;
  for (const auto& r : rows) {
    auto& obs = by_patient[r.patient_id];
    if (obs.empty()) order.push_back(r.patient_id);
    if (!obs.empty() && obs.back().time == r.time) {
      obs.back().sites.push_back(r.site_id);
      continue;
    }
    if (!obs.empty() && r.time <= obs.back().time) {
      const bool dup =
          std::any_of(obs.begin(), obs.end(), [&](const Obs& o) { return o.time == r.time; });
      throw ValidationError("line " + std::to_string(r.line) + ": " +
                            (dup ? "duplicate (patient, time) pair"
                                 : "observation times out of order") +
                            " for patient '" + r.patient_id + "' at time " +
                            std::to_string(r.time));
    }
    obs.push_back({r.time, {r.site_id}, r.line});
  }
  if (order.empty()) throw ValidationError("no observation rows");

  PanelDataset data;
  data.covariate_names = names_with_intercept(covariates);
  for (const auto& id : order) {
    auto& obs = by_patient[id];
    if (obs.size() < 2)
      throw ValidationError("patient '" + id + "' has fewer than 2 observations");
    Patient p;
    p.id = id;
    p.z = covariates_for(id, covariates);
    for (auto& o : obs) {
      p.obs_times.push_back(o.time);
      try {
        p.genotypes.emplace_back(std::move(o.sites));
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(o.line) + ": " + e.what());
      }
    }
    for (std::size_t j = 0; j + 1 < p.genotypes.size(); ++j) {
      ReducedInterval iv =
          reduce_pair(p.genotypes[j], p.genotypes[j + 1], p.obs_times[j + 1] - p.obs_times[j]);
      iv.t_start = p.obs_times[j];
      iv.t_end = p.obs_times[j + 1];
      p.intervals.push_back(iv);
    }
    data.patients.push_back(std::move(p));
  }
  return data;
}

PanelDataset validate_dataset(const std::vector<ReducedRow>& rows,
                              const CovariateTable* covariates) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<ReducedRow>> by_patient;
  for (const auto& r : rows) {
    auto& v = by_patient[r.patient_id];
    if (v.empty()) order.push_back(r.patient_id);
    if (!v.empty()) {
      if (r.t_start == v.back().t_start)
        throw ValidationError("line " + std::to_string(r.line) +
                              ": duplicate (patient, time) pair");
      if (r.t_start < v.back().t_end - 1e-12)
        throw ValidationError("line " + std::to_string(r.line) +
                              ": intervals out of order or overlapping for patient '" +
                              r.patient_id + "'");
    }
    v.push_back(r);
  }
  if (order.empty()) throw ValidationError("no interval rows");

  PanelDataset data;
  data.covariate_names = names_with_intercept(covariates);
  for (const auto& id : order) {
    Patient p;
    p.id = id;
    p.z = covariates_for(id, covariates);
    for (const auto& r : by_patient[id]) {
      ReducedInterval iv{r.a, r.b, r.c_new, r.t_start, r.t_end};
      try {
        iv.check_valid();
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(r.line) + ": " + e.what());
      }
      p.intervals.push_back(iv);
    }
    data.patients.push_back(std::move(p));
  }
  return data;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::ofstream create_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot create '" + path + "'");
  return out;
}

}  // namespace

void write_genotype_csv(const std::string& path, const PanelDataset& data) {
  std::ofstream out = create_or_throw(path);
  out << "patient_id,time,site_id\n";
  for (const auto& p : data.patients) {
    for (std::size_t j = 0; j < p.obs_times.size(); ++j)
      for (const auto& s : p.genotypes[j].sites)
        out << p.id << ',' << fmt(p.obs_times[j]) << ',' << s << '\n';
  }
}

void write_reduced_csv(const std::string& path, const PanelDataset& data) {
  std::ofstream out = create_or_throw(path);
  out << "patient_id,t_start,t_end,a,b,c_new\n";
  for (const auto& p : data.patients)
    for (const auto& iv : p.intervals)
      out << p.id << ',' << fmt(iv.t_start) << ',' << fmt(iv.t_end) << ',' << iv.a << ','
          << iv.b << ',' << iv.c_new << '\n';
}

void write_covariates_csv(const std::string& path, const PanelDataset& data) {
  std::ofstream out = create_or_throw(path);
  out << "patient_id";
  for (std::size_t i = 1; i < data.covariate_names.size(); ++i)
    out << ',' << data.covariate_names[i];
  out << '\n';
  for (const auto& p : data.patients) {
    out << p.id;
    for (long i = 1; i < p.z.size(); ++i) out << ',' << fmt(p.z[i]);
    out << '\n';
  }
}

}  // namespace bds

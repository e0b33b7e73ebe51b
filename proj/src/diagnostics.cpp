#include "infmcmc/diagnostics.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace infmcmc {

namespace {

bool is_constant(std::span<const double> s) {
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  return *lo == *hi;
}

/// Autocovariance at every lag 0..T-1, unnormalised sums.
std::vector<double> autocovariance_sums(std::span<const double> series) {
  const std::size_t t = series.size();
  double mean = 0.0;
  for (double x : series)
    mean += x;
  mean /= static_cast<double>(t);

  std::size_t padded = 1;
  while (padded < 2 * t)
    padded <<= 1;
  std::vector<double> centred(padded, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    centred[i] = series[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, centred);
  for (auto &c : spec)
    c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);
  acov.resize(t);
  return acov;
}

std::ofstream open_out(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  return out;
}

} // namespace

Autocorrelation autocorrelation(std::span<const double> series, int max_lag) {
  if (max_lag < 1 || series.size() <= static_cast<std::size_t>(max_lag))
    throw std::invalid_argument("autocorrelation: need T > max_lag >= 1");
  Autocorrelation out;
  if (is_constant(series)) {
    out.degenerate = true;
    return out;
  }
  const std::vector<double> acov = autocovariance_sums(series);
  out.values.resize(max_lag + 1);
  out.values[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k)
    out.values[k] = acov[k] / acov[0];
  return out;
}

EssEstimate ess(std::span<const double> series) {
  const std::size_t t = series.size();
  if (t < 4)
    throw std::invalid_argument("ess: need at least 4 samples");
  EssEstimate out;
  if (is_constant(series)) {
    out.degenerate = true;
    return out;
  }
  const std::vector<double> acov = autocovariance_sums(series);
  double sum_pairs = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < t; ++k) {
    const double gamma = (acov[2 * k] + acov[2 * k + 1]) / acov[0];
    if (!(gamma > 0.0))
      break;
    sum_pairs += gamma;
  }
  const double n = static_cast<double>(t);
  out.tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(n));
  out.ess = n / out.tau;
  out.super_efficient = out.ess > n;
  return out;
}

std::vector<EssEstimate> ess_columns(const Eigen::MatrixXd &samples) {
  std::vector<EssEstimate> out;
  out.reserve(samples.cols());
  std::vector<double> column(samples.rows());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    Eigen::Map<Eigen::VectorXd>(column.data(), samples.rows()) = samples.col(j);
    out.push_back(ess(column));
  }
  return out;
}

SummaryRow summarize_record(const ChainRecord &record) {
  if (record.length() < 1)
    throw std::invalid_argument("summarize: empty chain");
  SummaryRow row;
  row.method = record.label;
  long accepted = 0;
  for (auto a : record.accepted)
    accepted += a;
  const double t = static_cast<double>(record.length());
  row.ap = static_cast<double>(accepted) / t;
  row.sec_per_iter = record.wall_seconds / t;

  std::vector<double> values;
  for (const EssEstimate &e : ess_columns(record.samples)) {
    values.push_back(e.ess);
    row.degenerate_coords += e.degenerate;
    row.super_efficient_coords += e.super_efficient;
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  row.ess_min = values.front();
  row.ess_max = values.back();
  row.ess_med = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  row.min_ess_per_sec = record.wall_seconds > 0.0 ? row.ess_min / record.wall_seconds
                                                  : 0.0;
  row.pde_solves = record.solves.total();
  return row;
}

std::vector<SummaryRow> summarize(std::span<const ChainRecord> records,
                                  const std::string &baseline) {
  if (records.empty())
    throw std::invalid_argument("summarize: no records");
  std::vector<SummaryRow> rows;
  for (const ChainRecord &r : records)
    rows.push_back(summarize_record(r));
  auto base = std::find_if(rows.begin(), rows.end(),
                           [&](const SummaryRow &r) { return r.method == baseline; });
  if (base == rows.end())
    throw std::invalid_argument("summarize: baseline '" + baseline + "' not found");
  const double ref = base->min_ess_per_sec;
  for (SummaryRow &r : rows)
    r.speedup = ref > 0.0 ? r.min_ess_per_sec / ref : 0.0;
  base->speedup = 1.0;
  return rows;
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_summary_csv(const std::filesystem::path &path,
                       std::span<const SummaryRow> rows) {
  std::ofstream out = open_out(path);
  out << "method,ap,sec_per_iter,ess_min,ess_med,ess_max,min_ess_per_sec,speedup,"
         "pde_solves\n";
  for (const SummaryRow &r : rows) {
    out << r.method << ',' << format_number(r.ap) << ','
        << format_number(r.sec_per_iter) << ',' << format_number(r.ess_min) << ','
        << format_number(r.ess_med) << ',' << format_number(r.ess_max) << ','
        << format_number(r.min_ess_per_sec) << ',' << format_number(r.speedup)
        << ',' << r.pde_solves << '\n';
  }
}

void write_summary_json(const std::filesystem::path &path,
                        std::span<const SummaryRow> rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const SummaryRow &r : rows) {
    doc.push_back({{"method", r.method},
                   {"ap", r.ap},
                   {"sec_per_iter", r.sec_per_iter},
                   {"ess_min", r.ess_min},
                   {"ess_med", r.ess_med},
                   {"ess_max", r.ess_max},
                   {"min_ess_per_sec", r.min_ess_per_sec},
                   {"speedup", r.speedup},
                   {"pde_solves", r.pde_solves}});
  }
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_trace_csv(const std::filesystem::path &path, const ChainRecord &record) {
  std::ofstream out = open_out(path);
  out << "iter,misfit,accepted\n";
  for (long i = 0; i < record.length(); ++i)
    out << i << ',' << format_number(record.misfit[i]) << ','
        << int(record.accepted[i]) << '\n';
}

void write_samples_csv(const std::filesystem::path &path,
                       const ChainRecord &record) {
  std::ofstream out = open_out(path);
  out << "iter";
  for (Eigen::Index j = 0; j < record.samples.cols(); ++j)
    out << ",u" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < record.samples.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < record.samples.cols(); ++j)
      out << ',' << format_number(record.samples(i, j));
    out << '\n';
  }
}

Eigen::MatrixXd read_samples_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const auto cols = std::count(line.begin(), line.end(), ',');
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const char *p = line.data();
    const char *end = p + line.size();
    p = std::find(p, end, ',');
    for (long j = 0; j < cols; ++j) {
      if (p == end)
        throw std::runtime_error(path.string() + ": short row " + std::to_string(rows));
      ++p;
      double x = 0.0;
      const auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc())
        throw std::runtime_error(path.string() + ": bad number in row " +
                                 std::to_string(rows));
      values.push_back(x);
      p = res.ptr;
    }
    ++rows;
  }
  Eigen::MatrixXd out(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j)
      out(i, j) = values[i * cols + j];
  return out;
}

} // namespace infmcmc

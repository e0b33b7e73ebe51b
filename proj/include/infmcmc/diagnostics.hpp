#pragma once

#include "infmcmc/chain.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace infmcmc {

struct Autocorrelation {
  std::vector<double> values; ///< lags 0..max_lag, 1/T normalisation
  bool degenerate = false;    ///< constant series; values left empty
};

/// Sample autocorrelation through an FFT of the zero-padded centred series.
Autocorrelation autocorrelation(std::span<const double> series, int max_lag);

struct EssEstimate {
  double ess = 0.0;
  double tau = 0.0;             ///< integrated autocorrelation time
  bool degenerate = false;      ///< constant series, ess = 0
  bool super_efficient = false; ///< ess > T (negatively correlated chain)
};

/// Geyer's initial positive sequence: tau = -1 + 2 sum_k Gamma_k with
/// Gamma_k = rho_{2k} + rho_{2k+1}, summed while positive. tau is floored at
/// 1/log10(T), so ess never exceeds T log10(T).
EssEstimate ess(std::span<const double> series);

/// ESS of every column of a T x n sample matrix.
std::vector<EssEstimate> ess_columns(const Eigen::MatrixXd &samples);

struct SummaryRow {
  std::string method;
  double ap = 0.0;
  double sec_per_iter = 0.0;
  double ess_min = 0.0;
  double ess_med = 0.0;
  double ess_max = 0.0;
  double min_ess_per_sec = 0.0;
  double speedup = 0.0;
  long pde_solves = 0;
  int degenerate_coords = 0;
  int super_efficient_coords = 0;
};

SummaryRow summarize_record(const ChainRecord &record);

/// One row per record, speedups relative to the record labelled `baseline`.
std::vector<SummaryRow> summarize(std::span<const ChainRecord> records,
                                  const std::string &baseline);

/// Shortest round-trip decimal form of x.
std::string format_number(double x);

void write_summary_csv(const std::filesystem::path &path,
                       std::span<const SummaryRow> rows);
void write_summary_json(const std::filesystem::path &path,
                        std::span<const SummaryRow> rows);
/// Columns iter, misfit, accepted.
void write_trace_csv(const std::filesystem::path &path, const ChainRecord &record);
/// Columns iter, u0, ..., u{n-1}.
void write_samples_csv(const std::filesystem::path &path, const ChainRecord &record);
Eigen::MatrixXd read_samples_csv(const std::filesystem::path &path);

} // namespace infmcmc

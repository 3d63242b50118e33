#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qns/errors.hpp"

namespace qns {

// A time-stamped table of nonnegative scalar channels (norms, energies,
// extrema) recorded along a run. Column set is fixed at construction; rows
// must arrive with strictly increasing times and finite values.
class NormSeries {
 public:
  explicit NormSeries(std::vector<std::string> channels) : channels_(std::move(channels)) {
    if (channels_.empty()) throw DomainError("NormSeries needs at least one channel");
  }

  void add_row(double t, const std::vector<double>& values) {
    if (values.size() != channels_.size())
      throw ShapeError("NormSeries row has " + std::to_string(values.size()) +
                       " values, expected " + std::to_string(channels_.size()));
    if (!times_.empty() && !(t > times_.back()))
      throw DomainError("NormSeries times must be strictly increasing");
    if (!std::isfinite(t)) throw DomainError("NormSeries time must be finite");
    std::vector<double> row = values;
    for (double& v : row) {
      if (!std::isfinite(v)) throw DomainError("NormSeries value must be finite");
      if (v < 0) {
        if (v < -1e-13) throw DomainError("NormSeries channels must be nonnegative");
        v = 0;  // clamp roundoff-level negatives of true zeros
      }
    }
    times_.push_back(t);
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& channels() const { return channels_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }

  std::size_t channel_index(const std::string& name) const {
    auto it = std::find(channels_.begin(), channels_.end(), name);
    if (it == channels_.end()) throw DomainError("NormSeries has no channel '" + name + "'");
    return std::size_t(it - channels_.begin());
  }

  double value(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

  std::vector<double> column(const std::string& name) const {
    const std::size_t c = channel_index(name);
    std::vector<double> out(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = rows_[i][c];
    return out;
  }

 private:
  std::vector<std::string> channels_;
  std::vector<double> times_;
  std::vector<std::vector<double>> rows_;
};

struct DecayFit {
  double slope = 0;       // d log(value) / d log(1+t)
  double intercept = 0;   // log(value) at log(1+t) = 0
  double rms = 0;         // root-mean-square residual of the log-log fit
  std::size_t samples = 0;
  double bootstrap_ratio = 0;  // sup_{tau<=t}(1+tau)^{-2 s_th} v(tau)^2 growth
  bool bootstrap_monotone = false;
};

// Least-squares power-law fit of a positive channel against (1+t) on a time
// window. Requires at least `min_samples` rows spanning at least one decade in
// (1+t). Alongside the fit, checks the bootstrap functional
//   N(t) = sup_{tau<=t} (1+tau)^{-2 theory_slope} v(tau)^2
// for monotone boundedness: nondecreasing by construction, and the reported
// ratio N(end)/N(first window sample) must stay finite; a correct decay rate
// keeps it O(1). The fit is invariant under rescaling of the channel.
inline DecayFit fit_decay(const NormSeries& series, const std::string& channel, double t_lo,
                          double t_hi, double theory_slope, std::size_t min_samples = 20) {
  const auto col = series.column(channel);
  const auto& times = series.times();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < t_lo || t > t_hi) continue;
    if (!(col[i] > 0))
      throw FitError("decay fit needs strictly positive values on the window; channel '" +
                     channel + "' hit " + std::to_string(col[i]));
    xs.push_back(std::log1p(t));
    ys.push_back(std::log(col[i]));
  }
  if (xs.size() < min_samples)
    throw FitError("decay fit needs at least " + std::to_string(min_samples) +
                   " samples in the window, found " + std::to_string(xs.size()));
  if (xs.back() - xs.front() < std::log(10.0))
    throw FitError("decay fit window must span at least one decade in 1+t");

  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  DecayFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.samples = xs.size();
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);

  double sup = 0, first = -1;
  bool monotone = true;
  double prev = -1;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t_hi) break;
    const double cand = std::pow(1.0 + times[i], -2.0 * theory_slope) * col[i] * col[i];
    sup = std::max(sup, cand);
    if (times[i] >= t_lo) {
      if (first < 0) first = sup;
      if (prev >= 0 && sup < prev * (1 - 1e-12)) monotone = false;
      prev = sup;
    }
  }
  fit.bootstrap_monotone = monotone;  // running sup is nondecreasing by construction
  fit.bootstrap_ratio = first > 0 ? sup / first : 0;
  return fit;
}

}  // namespace qns

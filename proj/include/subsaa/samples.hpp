#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"

namespace subsaa {

// Row-major block of draws; one row per observation.
struct SampleSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::uint64_t root_seed = 0;
  std::uint64_t stream_index = 0;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct MomentEstimate {
  Vector mean;
  Matrix covariance;
  std::size_t count = 0;
};

inline SampleSet sample_gaussian(std::size_t count, const Vector& mean,
                                 const Matrix& covariance, RngStream stream) {
  const std::size_t n = mean.size();
  if (covariance.rows != n || covariance.cols != n)
    throw std::invalid_argument("sample_gaussian: covariance shape mismatch");
  const Matrix factor = psd_sqrt(covariance);

  SampleSet out;
  out.rows = count;
  out.cols = n;
  out.root_seed = stream.root_seed();
  out.stream_index = stream.stream_index();
  out.data.resize(count * n);
  Vector z(n);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t j = 0; j < n; ++j) z[j] = stream.next_normal();
    for (std::size_t i = 0; i < n; ++i) {
      double s = mean[i];
      for (std::size_t k = 0; k < n; ++k) s += factor(i, k) * z[k];
      out(r, i) = s;
    }
  }
  return out;
}

// Mean and divisor-nu covariance over rows [row_begin, row_end).
inline MomentEstimate sample_moments(const SampleSet& samples,
                                     std::size_t row_begin, std::size_t row_end) {
  if (row_end > samples.rows || row_begin >= row_end)
    throw std::invalid_argument("sample_moments: bad row range");
  const std::size_t n = samples.cols;
  const std::size_t count = row_end - row_begin;

  MomentEstimate m;
  m.count = count;
  m.mean.assign(n, 0.0);
  for (std::size_t r = row_begin; r < row_end; ++r)
    for (std::size_t j = 0; j < n; ++j) m.mean[j] += samples(r, j);
  for (double& v : m.mean) v /= static_cast<double>(count);

  m.covariance = Matrix(n, n);
  for (std::size_t r = row_begin; r < row_end; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      const double di = samples(r, i) - m.mean[i];
      for (std::size_t j = i; j < n; ++j)
        m.covariance(i, j) += di * (samples(r, j) - m.mean[j]);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      m.covariance(i, j) /= static_cast<double>(count);
      m.covariance(j, i) = m.covariance(i, j);
    }
  return m;
}

inline MomentEstimate sample_moments(const SampleSet& samples) {
  return sample_moments(samples, 0, samples.rows);
}

} // namespace subsaa

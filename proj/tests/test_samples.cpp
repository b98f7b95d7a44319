#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <subsaa/linalg.hpp>
#include <subsaa/rng.hpp>
#include <subsaa/samples.hpp>

using Catch::Approx;
using subsaa::Matrix;
using subsaa::RngStream;
using subsaa::Vector;

TEST_CASE("zero covariance degenerates to copies of the mean") {
  const Vector mean{1.5, -2.0, 0.25};
  Matrix cov(3, 3); // all zeros
  const auto s = subsaa::sample_gaussian(7, mean, cov, RngStream(1, 0));
  REQUIRE(s.rows == 7);
  REQUIRE(s.cols == 3);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c) REQUIRE(s(r, c) == mean[c]);
}

TEST_CASE("sampling is reproducible from the stream identity") {
  const Vector mean{0.0, 0.0};
  const Matrix cov = Matrix::identity(2);
  const auto a = subsaa::sample_gaussian(25, mean, cov, RngStream(77, 3));
  const auto b = subsaa::sample_gaussian(25, mean, cov, RngStream(77, 3));
  REQUIRE(a.data == b.data);
  REQUIRE(a.root_seed == 77);
  REQUIRE(a.stream_index == 3);
  const auto c = subsaa::sample_gaussian(25, mean, cov, RngStream(77, 4));
  REQUIRE(a.data != c.data);
}

TEST_CASE("moment covariance equals the brute-force double loop exactly") {
  const Vector mean{0.3, -0.1, 0.8, 0.0};
  Matrix cov(4, 4);
  for (std::size_t i = 0; i < 4; ++i) cov(i, i) = 1.0 + 0.25 * static_cast<double>(i);
  cov(0, 1) = cov(1, 0) = 0.4;
  cov(2, 3) = cov(3, 2) = -0.3;
  const auto s = subsaa::sample_gaussian(37, mean, cov, RngStream(5, 1));
  const auto m = subsaa::sample_moments(s);
  REQUIRE(m.count == 37);

  const std::size_t n = s.cols;
  Vector bf_mean(n, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t j = 0; j < n; ++j) bf_mean[j] += s(r, j);
  for (std::size_t j = 0; j < n; ++j) bf_mean[j] /= static_cast<double>(s.rows);
  for (std::size_t j = 0; j < n; ++j) REQUIRE(m.mean[j] == bf_mean[j]);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < s.rows; ++r)
        acc += (s(r, i) - bf_mean[i]) * (s(r, j) - bf_mean[j]);
      REQUIRE(m.covariance(i, j) == acc / static_cast<double>(s.rows));
    }
}

TEST_CASE("covariance uses the sample-count divisor") {
  subsaa::SampleSet s;
  s.rows = 2;
  s.cols = 1;
  s.data = {0.0, 2.0};
  const auto m = subsaa::sample_moments(s);
  REQUIRE(m.mean[0] == 1.0);
  REQUIRE(m.covariance(0, 0) == 1.0);
}

TEST_CASE("range moments match moments of the copied block") {
  const Vector mean{0.0, 1.0};
  const Matrix cov = Matrix::identity(2);
  const auto s = subsaa::sample_gaussian(20, mean, cov, RngStream(9, 0));
  const auto part = subsaa::sample_moments(s, 5, 12);
  subsaa::SampleSet block;
  block.rows = 7;
  block.cols = 2;
  for (std::size_t r = 5; r < 12; ++r)
    for (std::size_t c = 0; c < 2; ++c) block.data.push_back(s(r, c));
  const auto whole = subsaa::sample_moments(block);
  REQUIRE(part.mean == whole.mean);
  REQUIRE(part.covariance.data == whole.covariance.data);
  REQUIRE(part.count == 7);
}

TEST_CASE("empirical moments approach the generating distribution") {
  const Vector mean{1.0, -0.5, 0.0};
  Matrix cov(3, 3);
  cov(0, 0) = 1.0;
  cov(1, 1) = 2.0;
  cov(2, 2) = 0.5;
  cov(0, 1) = cov(1, 0) = 0.6;
  const auto s = subsaa::sample_gaussian(20000, mean, cov, RngStream(123, 0));
  const auto m = subsaa::sample_moments(s);
  for (std::size_t j = 0; j < 3; ++j) REQUIRE(m.mean[j] == Approx(mean[j]).margin(0.05));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      REQUIRE(m.covariance(i, j) == Approx(cov(i, j)).margin(0.08));
}

TEST_CASE("bad sampling inputs are rejected") {
  Matrix indefinite(2, 2);
  indefinite(0, 0) = 1.0;
  indefinite(1, 1) = -1.0;
  REQUIRE_THROWS_AS(subsaa::sample_gaussian(5, Vector{0, 0}, indefinite, RngStream(1, 0)),
                    std::domain_error);
  Matrix skew(2, 2);
  skew(0, 1) = 0.5; // not mirrored
  REQUIRE_THROWS_AS(subsaa::sample_gaussian(5, Vector{0, 0}, skew, RngStream(1, 0)),
                    std::domain_error);
  subsaa::SampleSet s;
  s.rows = 3;
  s.cols = 1;
  s.data = {1.0, 2.0, 3.0};
  REQUIRE_THROWS_AS(subsaa::sample_moments(s, 2, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(subsaa::sample_moments(s, 1, 5), std::invalid_argument);
}

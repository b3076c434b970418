// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fbq/direction_codebook.hpp"

namespace fbq {
namespace {

double brute_min_distance(const Matrix& u) {
  double d = 1.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < u.rows(); ++j) {
      const double c = std::min(1.0, std::abs(u.row(i).dot(u.row(j))));
      d = std::min(d, std::sqrt(1.0 - c * c));
    }
  }
  return d;
}

Vector random_vector(Rng& rng, int m) {
  std::normal_distribution<double> n;
  Vector v(m);
  for (int i = 0; i < m; ++i) v(i) = n(rng);
  return v;
}

TEST(LambdaM, ClosedForms) {
  EXPECT_NEAR(lambda_m(2), kPi / 2, 1e-14);
  EXPECT_NEAR(lambda_m(3), std::sqrt(2.0), 1e-14);
  for (int m = 2; m <= 8; ++m) EXPECT_GT(lambda_m(m), 1.0);
  EXPECT_THROW(lambda_m(1), InvalidArgument);
}

TEST(Grassmannian, TwoLinesInPlane) {
  Rng rng(1);
  const auto cb = build_grassmannian(2, 2, rng);
  EXPECT_NEAR(cb.min_chordal_distance(), 1.0, 1e-9);
}

TEST(Grassmannian, SixLinesInSpace) {
  Rng rng(2);
  const auto cb = build_grassmannian(6, 3, rng);
  EXPECT_GE(cb.min_chordal_distance(), 0.7);
  EXPECT_LE(cb.min_chordal_distance(), 2.0 / std::sqrt(5.0) + 1e-9);
}

TEST(Grassmannian, StoredDistanceIsRecomputed) {
  Rng rng(3);
  for (std::size_t n : {3u, 8u, 17u, 64u}) {
    const auto cb = build_grassmannian(n, 3, rng);
    EXPECT_EQ(cb.size(), n);
    EXPECT_NEAR(cb.min_chordal_distance(), brute_min_distance(cb.codewords()), 1e-12);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(cb.codeword(i).vector().norm(), 1.0, 1e-12);
  }
}

TEST(Grassmannian, SeededIsDeterministic) {
  Rng a(9), b(9);
  EXPECT_EQ(build_grassmannian(16, 3, a).codewords(), build_grassmannian(16, 3, b).codewords());
}

TEST(Grassmannian, PackingImprovesWithSize) {
  double prev = kPi;
  for (std::size_t n = 4; n <= 256; n *= 2) {
    Rng rng(100 + n);
    const auto cb = build_grassmannian(n, 3, rng);
    EXPECT_LT(cb.cap_opening(), prev) << n;
    prev = cb.cap_opening();
  }
}

TEST(QuantizeDirection, ParallelAndAntipodal) {
  Rng rng(4);
  const auto cb = build_grassmannian(8, 3, rng);
  for (std::size_t j = 0; j < cb.size(); ++j) {
    EXPECT_EQ(quantize_direction(cb.codeword(j).vector() * 2.5, cb), j);
    EXPECT_EQ(quantize_direction(-cb.codeword(j).vector(), cb), j);
  }
  EXPECT_THROW(quantize_direction(Vector::Zero(3), cb), InvalidArgument);
}

TEST(QuantizeDirection, ExhaustiveOracle) {
  Rng rng(5);
  const auto cb = build_grassmannian(8, 3, rng);
  for (int t = 0; t < 2000; ++t) {
    const Vector h = random_vector(rng, 3);
    std::size_t best = 0;
    double best_c = -1.0;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double c = std::abs(cb.codeword(j).vector().dot(h));
      if (c > best_c) {
        best_c = c;
        best = j;
      }
    }
    EXPECT_EQ(quantize_direction(h, cb), best);
  }
}

TEST(QuantizeDirection, TiesGoToLowestIndex) {
  Matrix rows(2, 2);
  rows << 1, 0, 0, 1;
  const DirectionCodebook cb(rows);
  Vector h(2);
  h << 1, 1;
  EXPECT_EQ(quantize_direction(h, cb), 0u);
}

TEST(QuantizeDirection, CapsCoverSphere) {
  Rng rng(6);
  const auto cb = build_grassmannian(32, 3, rng);
  const double phi = cb.cap_opening();
  for (int t = 0; t < 100000; ++t) {
    const Vector h = random_vector(rng, 3);
    const auto j = quantize_direction(h, cb);
    ASSERT_LE(angle_between(UnitDirection::normalized(h), cb.codeword(j)), phi);
  }
}

TEST(Rotation, IsometryAndDistance) {
  Rng rng(7);
  const auto cb = build_grassmannian(16, 4, rng);
  const auto rot = random_rotation(cb, rng);
  const Matrix g0 = cb.codewords() * cb.codewords().transpose();
  const Matrix g1 = rot.codewords() * rot.codewords().transpose();
  EXPECT_LT((g0 - g1).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(rot.min_chordal_distance(), cb.min_chordal_distance(), 1e-12);
  EXPECT_NEAR(brute_min_distance(rot.codewords()), cb.min_chordal_distance(), 1e-12);
}

TEST(Rotation, HaarIsOrthogonal) {
  Rng rng(8);
  for (int m = 2; m <= 8; ++m) {
    const Matrix q = haar_orthogonal(m, rng);
    EXPECT_LT((q.transpose() * q - Matrix::Identity(m, m)).norm(), 1e-12);
  }
}

TEST(Rotation, IdentityKeepsCodebook) {
  Rng rng(9);
  const auto cb = build_grassmannian(8, 3, rng);
  const DirectionCodebook same(cb.codewords() * Matrix::Identity(3, 3));
  EXPECT_EQ(same.codewords(), cb.codewords());
  EXPECT_EQ(same.min_chordal_distance(), cb.min_chordal_distance());
}

TEST(Rotation, FixedChannelMatchesRandomChannel) {
  // Rotating the codebook against a fixed h is equivalent to a random h.
  Rng rng(10);
  const auto cb = build_grassmannian(16, 3, rng);
  Vector h(3);
  h << 0.3, -1.2, 0.7;
  const auto hu = UnitDirection::normalized(h);
  const int n = 10000;
  double fixed = 0.0, fixed2 = 0.0, random = 0.0, random2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const auto rot = random_rotation(cb, rng);
    const double a = angle_between(hu, rot.codeword(quantize_direction(h, rot)));
    fixed += a;
    fixed2 += a * a;
    const Vector g = random_vector(rng, 3);
    const double b = angle_between(UnitDirection::normalized(g), cb.codeword(quantize_direction(g, cb)));
    random += b;
    random2 += b * b;
  }
  fixed /= n;
  random /= n;
  const double se = std::sqrt((fixed2 / n - fixed * fixed + random2 / n - random * random) / n);
  EXPECT_NEAR(fixed, random, 4 * se);
}

TEST(CapBound, PackedCodebookSatisfiesIt) {
  Rng rng(11);
  const auto cb = build_grassmannian(64, 3, rng);
  const double margin = verify_cap_bound(cb);
  EXPECT_GT(margin, 0.0);
  const double again = 4 * lambda_m(3) * std::pow(64.0, -0.5) - brute_min_distance(cb.codewords());
  EXPECT_NEAR(margin, again, 1e-12);
}

TEST(CapBound, TwoLinesInPlane) {
  Matrix rows(2, 2);
  rows << 1, 0, 0, 1;
  EXPECT_NEAR(verify_cap_bound(DirectionCodebook(rows)), kPi - 1.0, 1e-12);
}

TEST(CodebookIo, RoundTrip) {
  Rng rng(12);
  const auto cb = build_grassmannian(10, 3, rng);
  std::stringstream ss;
  write_codebook(ss, cb);
  const auto back = read_codebook(ss);
  EXPECT_LT((back.codewords() - cb.codewords()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Codebook, RejectsNonUnitRows) {
  Matrix rows(2, 2);
  rows << 2, 0, 0, 1;
  EXPECT_THROW(DirectionCodebook{rows}, InvalidArgument);
  EXPECT_NEAR(DirectionCodebook::normalize_rows(rows).codewords()(0, 0), 1.0, 1e-15);
}

}  // namespace
}  // namespace fbq

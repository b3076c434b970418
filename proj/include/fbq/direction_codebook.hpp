// SPDX-License-Identifier: Apache-2.0
//
// Real Grassmannian line-packing codebooks for channel direction feedback.

#pragma once

#include <iosfwd>

#include "fbq/channel_model.hpp"

namespace fbq {

/// N unit codewords in R^M, stored one per row. Lines are antipodally
/// identified, so u and -u quantize identically.
class DirectionCodebook {
 public:
  /// Rows must be unit norm within 1e-12 (use `normalize_rows` otherwise).
  explicit DirectionCodebook(Matrix rows);

  static DirectionCodebook normalize_rows(Matrix rows);

  std::size_t size() const { return static_cast<std::size_t>(u_.rows()); }
  int dim() const { return static_cast<int>(u_.cols()); }
  const Matrix& codewords() const { return u_; }
  UnitDirection codeword(std::size_t i) const;

  /// delta: min over pairs of sin(angle between the lines).
  double min_chordal_distance() const { return delta_; }
  /// phi = arcsin(delta); opening of the caps that cover the cells.
  double cap_opening() const { return std::asin(delta_); }

 private:
  friend DirectionCodebook random_rotation(const DirectionCodebook& cb, Rng& rng);
  DirectionCodebook(Matrix rows, double delta) : u_(std::move(rows)), delta_(delta) {}

  Matrix u_;
  double delta_;
};

DirectionCodebook random_rotation(const DirectionCodebook& cb, Rng& rng);

/// Minimum pairwise chordal distance of a set of unit rows.
double min_chordal_distance(const Matrix& unit_rows);

/// lambda_M = (sqrt(pi) Gamma((M+1)/2) / Gamma(M/2))^(1/(M-1)).
double lambda_m(int num_antennas);

struct PackingOptions {
  int restarts = 20;
  int iterations = 2000;
};

/// Best-of-R log-barrier repulsion packing: each restart starts from random
/// lines and descends on -sum log(1 - (u_i^T u_j)^2). The restart with the
/// largest min chordal distance wins. Restart r uses a seed derived from one
/// draw of `rng`, so the result does not depend on evaluation order.
DirectionCodebook build_grassmannian(std::size_t size, int num_antennas,
                                     Rng& rng, PackingOptions options = {});

/// Index of the codeword maximising |u^T h|; ties go to the lowest index.
/// Throws InvalidArgument for a zero channel.
std::size_t quantize_direction(const Vector& h, const DirectionCodebook& cb);

/// Haar-distributed orthogonal M x M matrix.
Matrix haar_orthogonal(int dim, Rng& rng);

/// Codebook with every codeword multiplied by one Haar orthogonal matrix.
/// Rotation preserves the minimum distance, which is carried over.
DirectionCodebook random_rotation(const DirectionCodebook& cb, Rng& rng);

/// 4 lambda_M N^(-1/(M-1)) - sin(phi); positive when the cap bound holds.
double verify_cap_bound(const DirectionCodebook& cb);

/// One codeword per line, space-separated doubles at 17 significant digits.
void write_codebook(std::ostream& os, const DirectionCodebook& cb);
DirectionCodebook read_codebook(std::istream& is);

}  // namespace fbq

// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric types, seeded random sources and the error types used across
// the feedback-quantization library.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fbq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Random source used everywhere in the library. Every consumer takes it by
/// reference so that callers control seeding and per-worker ownership.
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity is mathematically undefined for the given input
/// (rank-deficient beams, divergent moments, no root in bracket, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// SplitMix64 finaliser; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for (stream, index) under a master seed. Results depend only on
/// the triple, never on which worker evaluates it.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) {
  return mix_seed(mix_seed(mix_seed(master) ^ stream) ^ index);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace fbq

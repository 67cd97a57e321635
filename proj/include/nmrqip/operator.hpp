// Copyright 2026 The nmrqip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nmrqip {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-10;

inline constexpr std::size_t kDefaultMaxSpins = 12;

// Largest register the library will build. NMRQIP_MAX_SPINS overrides the default.
inline std::size_t max_spins() {
  if (const char* env = std::getenv("NMRQIP_MAX_SPINS")) {
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && value >= 1 && value <= 20) return value;
  }
  return kDefaultMaxSpins;
}

inline std::size_t dimension_for(std::size_t n_spins) {
  if (n_spins == 0) throw std::invalid_argument("register must hold at least one spin");
  if (n_spins > max_spins())
    throw std::invalid_argument("register of " + std::to_string(n_spins) +
                                " spins exceeds the dimension cap of " +
                                std::to_string(max_spins()));
  return std::size_t{1} << n_spins;
}

// Number of spins for a 2^N dimensional operator, or throws.
inline std::size_t spins_for_dimension(Eigen::Index dim) {
  std::size_t n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++n;
  }
  if (d != dim || n == 0) throw std::invalid_argument("operator dimension is not 2^N");
  return n;
}

inline bool is_hermitian(const Operator& h, double tol = kHermitianTolerance) {
  if (h.rows() != h.cols()) return false;
  return (h - h.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, h.cwiseAbs().maxCoeff());
}

inline bool is_unitary(const Operator& u, double tol = kUnitaryTolerance) {
  if (u.rows() != u.cols()) return false;
  const Operator id = Operator::Identity(u.rows(), u.cols());
  return (u.adjoint() * u - id).cwiseAbs().maxCoeff() <= tol;
}

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

enum class Axis { X, Y, Z, Plus, Minus };

inline Operator pauli(Axis axis) {
  Operator m = Operator::Zero(2, 2);
  switch (axis) {
    case Axis::X:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Axis::Y:
      m(0, 1) = -kI;
      m(1, 0) = kI;
      break;
    case Axis::Z:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case Axis::Plus:  // sigma_x + i sigma_y
      m(0, 1) = 2.0;
      break;
    case Axis::Minus:
      m(1, 0) = 2.0;
      break;
  }
  return m;
}

/// Embeds a single-spin Pauli (or ladder) operator into an n-spin register.
/// Spin 0 is the most significant tensor factor.
inline Operator pauli_embed(Axis axis, std::size_t spin_index, std::size_t n_spins) {
  const std::size_t dim = dimension_for(n_spins);
  if (spin_index >= n_spins)
    throw std::out_of_range("spin index " + std::to_string(spin_index) +
                            " outside register of " + std::to_string(n_spins));
  const Operator p = pauli(axis);
  // I_left (x) p (x) I_right, filled directly to avoid building large Kronecker chains.
  const std::size_t right = std::size_t{1} << (n_spins - 1 - spin_index);
  Operator out = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t row = 0; row < dim; ++row) {
    const std::size_t bit = (row / right) & 1U;
    for (std::size_t b = 0; b < 2; ++b) {
      const Complex v = p(static_cast<Eigen::Index>(bit), static_cast<Eigen::Index>(b));
      if (v == Complex{}) continue;
      const std::size_t col = b == bit ? row : (b > bit ? row + right : row - right);
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = v;
    }
  }
  return out;
}

// Product of Pauli-z on two spins; diagonal.
inline Operator zz_embed(std::size_t i, std::size_t j, std::size_t n_spins) {
  return pauli_embed(Axis::Z, i, n_spins) * pauli_embed(Axis::Z, j, n_spins);
}

/// exp(-i angle/2 sigma_z) on one spin of the register.
inline Operator rz(double angle, std::size_t spin, std::size_t n_spins) {
  const std::size_t dim = dimension_for(n_spins);
  if (spin >= n_spins) throw std::out_of_range("spin index out of range");
  const std::size_t right = std::size_t{1} << (n_spins - 1 - spin);
  Operator out = Operator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    const double sign = ((k / right) & 1U) ? -1.0 : 1.0;
    out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) =
        std::exp(-kI * (0.5 * angle * sign));
  }
  return out;
}

/// Rotation by `angle` about the xy-plane axis (cos phase, sin phase) on one spin.
inline Operator rxy(double angle, double phase, std::size_t spin, std::size_t n_spins) {
  const Operator axis = std::cos(phase) * pauli_embed(Axis::X, spin, n_spins) +
                        std::sin(phase) * pauli_embed(Axis::Y, spin, n_spins);
  const Eigen::Index dim = axis.rows();
  return std::cos(0.5 * angle) * Operator::Identity(dim, dim) - kI * std::sin(0.5 * angle) * axis;
}

// Product of per-spin z-rotations, angles[k] on spin k.
template <typename Range>
Operator rz_all(const Range& angles, std::size_t n_spins) {
  const std::size_t dim = dimension_for(n_spins);
  Operator out = Operator::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  std::size_t spin = 0;
  for (double a : angles) {
    if (a != 0.0) out = rz(a, spin, n_spins) * out;
    ++spin;
  }
  return out;
}

}  // namespace nmrqip

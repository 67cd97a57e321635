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

#include "nmrqip/operator.hpp"

#include <deque>
#include <stdexcept>
#include <vector>

namespace nmrqip {

inline constexpr double kLieRankTolerance = 1e-9;

namespace detail {

inline Operator traceless_part(const Operator& h) {
  const auto d = h.rows();
  return h - (h.trace() / static_cast<double>(d)) * Operator::Identity(d, d);
}

// Orthonormal basis under Re Tr(A^dagger B), grown by Gram-Schmidt with one
// reorthogonalization pass.
class OperatorBasis {
 public:
  explicit OperatorBasis(double tol) : tol_(tol) {}

  bool try_add(Operator v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis_) v -= (b.adjoint() * v).trace().real() * b;
    const double norm = v.norm();
    if (norm <= tol_) return false;
    basis_.push_back(v / norm);
    return true;
  }

  const std::vector<Operator>& elements() const { return basis_; }
  std::size_t size() const { return basis_.size(); }

 private:
  double tol_;
  std::vector<Operator> basis_;
};

}  // namespace detail

/// Dimension of the real Lie algebra generated by {iH} for the given Hermitian
/// operators, restricted to its traceless part. Every new basis element is
/// bracketed with each generator until nothing new appears or the algebra
/// fills su(d).
inline std::size_t lie_algebra_dimension(const std::vector<Operator>& hermitian,
                                         double tol = kLieRankTolerance) {
  if (hermitian.empty()) return 0;
  const auto d = hermitian.front().rows();
  const std::size_t full = static_cast<std::size_t>(d * d) - 1;
  detail::OperatorBasis basis(tol);
  std::vector<Operator> generators;
  std::deque<Operator> pending;
  for (const auto& h : hermitian) {
    if (h.rows() != d || h.cols() != d) throw std::invalid_argument("generators differ in dimension");
    if (!is_hermitian(h)) throw std::invalid_argument("generators must be Hermitian");
    const Operator t = detail::traceless_part(h);
    const double norm = t.norm();
    if (norm <= tol) continue;
    generators.push_back(t / norm);
    if (basis.try_add(generators.back())) pending.push_back(basis.elements().back());
  }
  while (!pending.empty() && basis.size() < full) {
    const Operator b = pending.front();
    pending.pop_front();
    for (const auto& g : generators) {
      // i[g, b] stays Hermitian.
      if (basis.try_add(kI * commutator(g, b))) pending.push_back(basis.elements().back());
      if (basis.size() >= full) break;
    }
  }
  return basis.size();
}

/// Lie-algebra dimension of a drift plus control Hamiltonians; the system is
/// fully controllable when it reaches 4^N - 1.
inline std::size_t controllability_rank(const Operator& drift, const std::vector<Operator>& controls) {
  std::vector<Operator> all{drift};
  all.insert(all.end(), controls.begin(), controls.end());
  return lie_algebra_dimension(all);
}

inline bool fully_controllable(std::size_t rank, Eigen::Index dim) {
  return rank >= static_cast<std::size_t>(dim * dim) - 1;
}

}  // namespace nmrqip

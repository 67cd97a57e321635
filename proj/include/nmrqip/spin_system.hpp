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

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace nmrqip {

enum class SpinKind { Nuclear, Electron };

struct SpinSpecies {
  std::string name;
  SpinKind kind = SpinKind::Nuclear;
  // Signed relative gyromagnetic magnitude. Informational; offsets carry the physics.
  double gyromagnetic_class = 1.0;
};

struct Spin {
  std::string label;
  std::string species;
  double offset_hz = 0.0;  // relative to the species carrier
};

struct HyperfineCoupling {
  std::size_t electron = 0;
  std::size_t nucleus = 0;
  double az_hz = 0.0;
  double ax_hz = 0.0;
};

using CouplingTable = Eigen::MatrixXd;

enum class HamiltonianMode { Weak, Full };

// Weak-coupling regime holds when |dnu| exceeds this many times the coupling.
inline constexpr double kWeakCouplingFactor = 10.0;

/// Static description of a spin-1/2 register: spins, species, and couplings.
///
/// Offsets and couplings are stored in Hz. Every Hamiltonian built from a
/// SpinSystem is in rad/s; the 2*pi conversion happens inside the builders.
/// Immutable after construction.
class SpinSystem {
 public:
  SpinSystem(std::vector<SpinSpecies> species, std::vector<Spin> spins, CouplingTable j_hz,
             CouplingTable dipolar_hz, std::vector<HyperfineCoupling> hyperfine = {})
      : species_(std::move(species)),
        spins_(std::move(spins)),
        j_hz_(std::move(j_hz)),
        dipolar_hz_(std::move(dipolar_hz)),
        hyperfine_(std::move(hyperfine)) {
    validate();
  }

  std::size_t size() const { return spins_.size(); }
  std::size_t dimension() const { return std::size_t{1} << spins_.size(); }
  const std::vector<Spin>& spins() const { return spins_; }
  const Spin& spin(std::size_t i) const { return spins_.at(i); }
  const std::vector<SpinSpecies>& species() const { return species_; }
  const CouplingTable& j_hz() const { return j_hz_; }
  const CouplingTable& dipolar_hz() const { return dipolar_hz_; }
  const std::vector<HyperfineCoupling>& hyperfine() const { return hyperfine_; }

  double j(std::size_t a, std::size_t b) const { return j_hz_(idx(a), idx(b)); }
  double dipolar(std::size_t a, std::size_t b) const { return dipolar_hz_(idx(a), idx(b)); }

  const SpinSpecies& species_of(std::size_t i) const {
    const auto& name = spins_.at(i).species;
    auto it = std::find_if(species_.begin(), species_.end(),
                           [&](const SpinSpecies& s) { return s.name == name; });
    return *it;
  }

  bool has_species(const std::string& name) const {
    return std::any_of(species_.begin(), species_.end(),
                       [&](const SpinSpecies& s) { return s.name == name; });
  }

  std::vector<std::size_t> spins_of_species(const std::string& name) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < spins_.size(); ++i)
      if (spins_[i].species == name) out.push_back(i);
    return out;
  }

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < spins_.size(); ++i)
      if (spins_[i].label == label) return i;
    return std::nullopt;
  }

  /// Secular (sigma_z sigma_z) treatment is valid for the pair: heteronuclear, or
  /// chemical-shift difference well above every coupling between the two.
  bool weak_coupling_valid(std::size_t a, std::size_t b) const {
    if (a == b) return true;
    if (spins_.at(a).species != spins_.at(b).species) return true;
    const double dnu = std::abs(spins_[a].offset_hz - spins_[b].offset_hz);
    const double coupling = std::max(std::abs(j(a, b)), std::abs(dipolar(a, b)));
    return dnu > kWeakCouplingFactor * coupling;
  }

  /// Copy with every offset shifted by `delta_hz` (static field inhomogeneity).
  SpinSystem with_field_offset(double delta_hz) const {
    SpinSystem out = *this;
    for (auto& s : out.spins_) s.offset_hz += delta_hz;
    return out;
  }

  /// Copy with the given offsets replacing the stored ones.
  SpinSystem with_offsets(std::span<const double> offsets_hz) const {
    if (offsets_hz.size() != size()) throw std::invalid_argument("offset list length mismatch");
    SpinSystem out = *this;
    for (std::size_t i = 0; i < size(); ++i) out.spins_[i].offset_hz = offsets_hz[i];
    return out;
  }

  /// Sub-register of the listed spins, in the listed order, couplings preserved.
  SpinSystem subsystem(std::span<const std::size_t> keep) const {
    std::vector<Spin> spins;
    std::set<std::string> used;
    for (auto k : keep) {
      spins.push_back(spins_.at(k));
      used.insert(spins_[k].species);
    }
    std::vector<SpinSpecies> species;
    for (const auto& s : species_)
      if (used.count(s.name)) species.push_back(s);
    const auto n = static_cast<Eigen::Index>(keep.size());
    CouplingTable j = CouplingTable::Zero(n, n);
    CouplingTable d = CouplingTable::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        j(a, b) = j_hz_(idx(keep[a]), idx(keep[b]));
        d(a, b) = dipolar_hz_(idx(keep[a]), idx(keep[b]));
      }
    std::vector<HyperfineCoupling> hf;
    for (const auto& h : hyperfine_) {
      auto e = std::find(keep.begin(), keep.end(), h.electron);
      auto nuc = std::find(keep.begin(), keep.end(), h.nucleus);
      if (e != keep.end() && nuc != keep.end())
        hf.push_back({static_cast<std::size_t>(e - keep.begin()),
                      static_cast<std::size_t>(nuc - keep.begin()), h.az_hz, h.ax_hz});
    }
    return SpinSystem(std::move(species), std::move(spins), std::move(j), std::move(d),
                      std::move(hf));
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  void validate() const {
    if (spins_.empty()) throw std::invalid_argument("spin system needs at least one spin");
    if (spins_.size() > max_spins())
      throw std::invalid_argument("spin system exceeds the dimension cap of " +
                                  std::to_string(max_spins()) + " spins");
    std::set<std::string> names;
    for (const auto& s : species_) {
      if (s.name.empty()) throw std::invalid_argument("species name must be nonempty");
      if (!names.insert(s.name).second)
        throw std::invalid_argument("duplicate species '" + s.name + "'");
      if (!std::isfinite(s.gyromagnetic_class))
        throw std::invalid_argument("non-finite gyromagnetic class for '" + s.name + "'");
    }
    std::set<std::string> labels;
    for (const auto& s : spins_) {
      if (s.label.empty()) throw std::invalid_argument("spin label must be nonempty");
      if (!labels.insert(s.label).second)
        throw std::invalid_argument("duplicate spin label '" + s.label + "'");
      if (!names.count(s.species))
        throw std::invalid_argument("spin '" + s.label + "' has undeclared species '" +
                                    s.species + "'");
      if (!std::isfinite(s.offset_hz))
        throw std::invalid_argument("non-finite offset for spin '" + s.label + "'");
    }
    check_table(j_hz_, "J");
    check_table(dipolar_hz_, "dipolar");
    for (const auto& h : hyperfine_) {
      if (h.electron >= size() || h.nucleus >= size())
        throw std::invalid_argument("hyperfine entry references a missing spin");
      if (species_of(h.electron).kind != SpinKind::Electron ||
          species_of(h.nucleus).kind != SpinKind::Nuclear)
        throw std::invalid_argument("hyperfine entry must pair an electron with a nucleus");
      if (!std::isfinite(h.az_hz) || !std::isfinite(h.ax_hz))
        throw std::invalid_argument("non-finite hyperfine coupling");
    }
  }

  void check_table(const CouplingTable& t, const char* what) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (t.rows() != n || t.cols() != n)
      throw std::invalid_argument(std::string(what) + " table must be " + std::to_string(n) +
                                  "x" + std::to_string(n));
    for (Eigen::Index a = 0; a < n; ++a) {
      if (t(a, a) != 0.0)
        throw std::invalid_argument(std::string(what) + " table diagonal must be zero");
      for (Eigen::Index b = 0; b < n; ++b) {
        if (!std::isfinite(t(a, b)))
          throw std::invalid_argument(std::string(what) + " table has a non-finite entry");
        if (t(a, b) != t(b, a))
          throw std::invalid_argument(std::string(what) + " table is not symmetric at (" +
                                      std::to_string(a) + "," + std::to_string(b) + ")");
      }
    }
  }

  std::vector<SpinSpecies> species_;
  std::vector<Spin> spins_;
  CouplingTable j_hz_;
  CouplingTable dipolar_hz_;
  std::vector<HyperfineCoupling> hyperfine_;
};

/// Incremental construction of a SpinSystem. Species referenced by spins are
/// declared on first use (nuclear, unless declared earlier).
class SpinSystemBuilder {
 public:
  SpinSystemBuilder& species(std::string name, SpinKind kind, double gyromagnetic_class = 1.0) {
    for (auto& s : species_)
      if (s.name == name) {
        s.kind = kind;
        s.gyromagnetic_class = gyromagnetic_class;
        return *this;
      }
    species_.push_back({std::move(name), kind, gyromagnetic_class});
    return *this;
  }

  SpinSystemBuilder& spin(std::string label, std::string species_name, double offset_hz) {
    bool known = false;
    for (const auto& s : species_) known = known || s.name == species_name;
    if (!known) species_.push_back({species_name, SpinKind::Nuclear, 1.0});
    spins_.push_back({std::move(label), std::move(species_name), offset_hz});
    return *this;
  }

  SpinSystemBuilder& j(std::size_t a, std::size_t b, double hz) {
    j_.emplace_back(a, b, hz);
    return *this;
  }

  SpinSystemBuilder& dipolar(std::size_t a, std::size_t b, double hz) {
    d_.emplace_back(a, b, hz);
    return *this;
  }

  SpinSystemBuilder& hyperfine(std::size_t electron, std::size_t nucleus, double az_hz,
                               double ax_hz) {
    hf_.push_back({electron, nucleus, az_hz, ax_hz});
    return *this;
  }

  SpinSystem build() const {
    const auto n = static_cast<Eigen::Index>(spins_.size());
    return SpinSystem(species_, spins_, fill(j_, n), fill(d_, n), hf_);
  }

 private:
  using Entry = std::tuple<std::size_t, std::size_t, double>;

  static CouplingTable fill(const std::vector<Entry>& entries, Eigen::Index n) {
    CouplingTable t = CouplingTable::Zero(n, n);
    for (const auto& [a, b, v] : entries) {
      if (a == b) throw std::invalid_argument("coupling of a spin to itself");
      if (static_cast<Eigen::Index>(std::max(a, b)) >= n)
        throw std::invalid_argument("coupling references a missing spin");
      t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      t(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
    return t;
  }

  std::vector<SpinSpecies> species_;
  std::vector<Spin> spins_;
  std::vector<Entry> j_;
  std::vector<Entry> d_;
  std::vector<HyperfineCoupling> hf_;
};

}  // namespace nmrqip

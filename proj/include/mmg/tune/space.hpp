#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mmg/masac/trainer.hpp"

namespace mmg::tune {

enum class ParamScale { linear, log };

struct ContinuousParam {
  std::string name;
  double lo = 0;
  double hi = 1;
  ParamScale scale = ParamScale::linear;

  double from_unit(double u) const;
  double to_unit(double v) const;
};

struct DiscreteParam {
  std::string name;
  std::vector<double> choices;

  double from_unit(double u) const;  // snaps to a choice
  double to_unit(double v) const;    // centre of the nearest choice's cell
};

/// The tuned MASAC hyperparameters, in fixed dimension order:
/// [gamma, a_l, c_l, batch_n, kappa].
struct SearchSpace {
  static constexpr int kDims = 5;

  ContinuousParam gamma{"gamma", 0.80, 0.99, ParamScale::linear};
  ContinuousParam a_l{"a_l", 1e-5, 1e-2, ParamScale::log};
  ContinuousParam c_l{"c_l", 1e-5, 1e-2, ParamScale::log};
  DiscreteParam batch_n{"batch_n", {64, 128, 256, 512, 1024}};
  ContinuousParam kappa{"kappa", 1e-3, 1.0, ParamScale::log};

  void validate() const;

  /// Maps a unit-cube point to hyperparameters; fields outside the search
  /// space are copied from `base`.
  masac::SacHyperparams decode(std::span<const double> u, const masac::SacHyperparams& base) const;

  /// Inverse map (discrete dims land on their cell centre).
  std::array<double, kDims> encode(const masac::SacHyperparams& hp) const;

  std::array<std::string, kDims> names() const;
};

}  // namespace mmg::tune

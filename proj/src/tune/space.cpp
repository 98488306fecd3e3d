#include "mmg/tune/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmg::tune {

double ContinuousParam::from_unit(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (scale == ParamScale::log) return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  return lo + u * (hi - lo);
}

double ContinuousParam::to_unit(double v) const {
  double u;
  if (scale == ParamScale::log)
    u = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
  else
    u = (v - lo) / (hi - lo);
  return std::clamp(u, 0.0, 1.0);
}

double DiscreteParam::from_unit(double u) const {
  const int k = static_cast<int>(choices.size());
  const int idx = std::min(k - 1, std::max(0, static_cast<int>(u * k)));
  return choices[idx];
}

double DiscreteParam::to_unit(double v) const {
  const int k = static_cast<int>(choices.size());
  int best = 0;
  for (int i = 1; i < k; ++i)
    if (std::fabs(choices[i] - v) < std::fabs(choices[best] - v)) best = i;
  return (best + 0.5) / k;
}

void SearchSpace::validate() const {
  const auto check_cont = [](const ContinuousParam& p) {
    if (!(p.lo < p.hi)) throw std::invalid_argument("search space: need lo < hi for " + p.name);
    if (p.scale == ParamScale::log && !(p.lo > 0))
      throw std::invalid_argument("search space: log-scaled range must be positive for " + p.name);
  };
  check_cont(gamma);
  check_cont(a_l);
  check_cont(c_l);
  check_cont(kappa);
  if (batch_n.choices.empty())
    throw std::invalid_argument("search space: batch_n choices must be non-empty");
  if (!(gamma.lo > 0 && gamma.hi < 1))
    throw std::invalid_argument("search space: gamma range must stay inside (0,1)");
}

masac::SacHyperparams SearchSpace::decode(std::span<const double> u,
                                          const masac::SacHyperparams& base) const {
  if (u.size() != kDims) throw std::invalid_argument("SearchSpace::decode: need 5 coordinates");
  masac::SacHyperparams hp = base;
  hp.gamma = gamma.from_unit(u[0]);
  hp.a_l = a_l.from_unit(u[1]);
  hp.c_l = c_l.from_unit(u[2]);
  hp.batch_n = static_cast<int>(batch_n.from_unit(u[3]));
  hp.kappa = kappa.from_unit(u[4]);
  return hp;
}

std::array<double, SearchSpace::kDims> SearchSpace::encode(const masac::SacHyperparams& hp) const {
  return {gamma.to_unit(hp.gamma), a_l.to_unit(hp.a_l), c_l.to_unit(hp.c_l),
          batch_n.to_unit(static_cast<double>(hp.batch_n)), kappa.to_unit(hp.kappa)};
}

std::array<std::string, SearchSpace::kDims> SearchSpace::names() const {
  return {gamma.name, a_l.name, c_l.name, batch_n.name, kappa.name};
}

}  // namespace mmg::tune

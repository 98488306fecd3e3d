#include "mmg/tune/lhs.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace mmg::tune {

std::uint64_t bootstrap_count(int D, int U) {
  if (D < 1 || U < 1) throw std::invalid_argument("bootstrap_count: D and U must be >= 1");
  // D! with saturation
  unsigned __int128 fact = 1;
  for (int d = 2; d <= D; ++d) {
    fact *= static_cast<unsigned>(d);
    if (fact > std::numeric_limits<std::uint64_t>::max())
      return std::numeric_limits<std::uint64_t>::max();
  }
  unsigned __int128 result = 1;
  for (int e = 0; e < U - 1; ++e) {
    result *= fact;
    if (result > std::numeric_limits<std::uint64_t>::max())
      return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(result);
}

std::vector<std::vector<double>> lhs_unit(int dims, int D, util::Rng& rng) {
  if (dims < 1 || D < 1) throw std::invalid_argument("lhs_unit: dims and D must be >= 1");
  std::vector<std::vector<double>> points(D, std::vector<double>(dims));
  std::vector<int> perm(D);
  for (int d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with the project RNG
    for (int i = D - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int p = 0; p < D; ++p)
      points[p][d] = (perm[p] + rng.uniform01()) / static_cast<double>(D);
  }
  return points;
}

std::vector<masac::SacHyperparams> lhs_sample(const SearchSpace& space, int D,
                                              std::uint64_t seed,
                                              const masac::SacHyperparams& base) {
  space.validate();
  util::Rng rng(util::derive_seed(seed, "lhs"));
  const auto unit = lhs_unit(SearchSpace::kDims, D, rng);
  std::vector<masac::SacHyperparams> out;
  out.reserve(D);
  for (const auto& u : unit) out.push_back(space.decode(u, base));
  return out;
}

}  // namespace mmg::tune

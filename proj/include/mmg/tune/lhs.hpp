#pragma once

#include <cstdint>
#include <vector>

#include "mmg/tune/space.hpp"
#include "mmg/util/rng.hpp"

namespace mmg::tune {

/// (D!)^(U-1), saturating at UINT64_MAX. Reported combinatorial size of the
/// bootstrap design; not used for allocation.
std::uint64_t bootstrap_count(int D, int U);

/// Latin hypercube design on the unit cube: D points, each dimension's D
/// equal strata occupied exactly once, stratum order independently permuted
/// per dimension. Deterministic under the RNG state.
std::vector<std::vector<double>> lhs_unit(int dims, int D, util::Rng& rng);

/// LHS over the search space (strata live in the transformed, i.e. log or
/// choice-index, coordinates). Returns decoded hyperparameter sets.
std::vector<masac::SacHyperparams> lhs_sample(const SearchSpace& space, int D,
                                              std::uint64_t seed,
                                              const masac::SacHyperparams& base);

}  // namespace mmg::tune

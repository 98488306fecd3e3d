#pragma once

#include <functional>
#include <string>

#include "mmg/tune/gp.hpp"
#include "mmg/tune/lhs.hpp"
#include "mmg/tune/space.hpp"

namespace mmg::tune {

struct TrialRecord {
  enum class Status { completed, failed };

  int trial_id = 0;
  masac::SacHyperparams hp;
  double objective = 0;  // final total reward for all agents
  std::uint64_t seed = 0;
  double wall_time_s = 0;
  Status status = Status::completed;
  std::string error;
};

struct TunerOptions {
  int bootstrap = 8;       // LHS trials before the GP takes over
  int n_candidates = 512;  // fresh-LHS candidates scored per proposal
  int jobs = 1;            // parallel trials (1 = deterministic reference)
  GpOptions gp;
};

/// Maps a hyperparameter set and per-trial seed to the training objective.
/// Throwing marks the trial failed.
using Objective = std::function<double(const masac::SacHyperparams& hp, std::uint64_t seed)>;

/// Scores n_candidates fresh-LHS points by expected improvement over the
/// model's best observed objective and returns the arg-max (first index wins
/// ties). The returned point is in unit-cube coordinates.
std::vector<double> propose_next(const GpModel& model, const SearchSpace& space,
                                 int n_candidates, std::uint64_t seed);

struct TuneResult {
  std::vector<TrialRecord> records;
  int best_index = -1;  // completed trial with the highest objective

  const TrialRecord& best() const { return records.at(best_index); }
};

struct AllTrialsFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs M trials: an LHS bootstrap of min(M, bootstrap) points, then
/// GP-proposed trials. Failed trials are recorded and excluded from the GP.
/// With jobs = 1 the full sequence is a pure function of (space, M, seed).
TuneResult run_trials(const SearchSpace& space, int M, const Objective& objective,
                      std::uint64_t seed, const TunerOptions& options = {},
                      const masac::SacHyperparams& base = {});

}  // namespace mmg::tune

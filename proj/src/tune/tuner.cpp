#include "mmg/tune/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace mmg::tune {

std::vector<double> propose_next(const GpModel& model, const SearchSpace& space,
                                 int n_candidates, std::uint64_t seed) {
  if (n_candidates < 1) throw std::invalid_argument("propose_next: need candidates");
  space.validate();
  util::Rng rng(util::derive_seed(seed, "candidates"));
  const auto candidates = lhs_unit(SearchSpace::kDims, n_candidates, rng);
  const double f_best = model.best_observed();
  int best = 0;
  double best_ei = -1.0;
  for (int c = 0; c < n_candidates; ++c) {
    const auto p = model.predict(candidates[c]);
    const double ei = expected_improvement(p.mean, p.var, f_best);
    if (ei > best_ei) {  // strict: ties keep the lowest index
      best_ei = ei;
      best = c;
    }
  }
  return candidates[best];
}

TuneResult run_trials(const SearchSpace& space, int M, const Objective& objective,
                      std::uint64_t seed, const TunerOptions& options,
                      const masac::SacHyperparams& base) {
  if (M < 1) throw std::invalid_argument("run_trials: M must be >= 1");
  space.validate();
  const int bootstrap_n = std::min(M, std::max(1, options.bootstrap));

  util::Rng boot_rng(util::derive_seed(seed, "lhs"));
  const auto boot = lhs_unit(SearchSpace::kDims, bootstrap_n, boot_rng);

  TuneResult result;
  result.records.resize(M);
  std::vector<char> recorded(M, 0);

  std::mutex mu;
  int next_k = 0;

  const auto worker = [&] {
    for (;;) {
      std::vector<double> u;
      int k;
      {
        // proposal (and the GP fit behind it) is serialized; trials that are
        // already complete at proposal time inform the model
        std::lock_guard<std::mutex> lock(mu);
        if (next_k >= M) return;
        k = next_k++;
        if (k < bootstrap_n) {
          u = boot[k];
        } else {
          std::vector<std::vector<double>> xs;
          std::vector<double> ys;
          for (int i = 0; i < M; ++i) {
            if (recorded[i] && result.records[i].status == TrialRecord::Status::completed) {
              const auto enc = space.encode(result.records[i].hp);
              xs.emplace_back(enc.begin(), enc.end());
              ys.push_back(result.records[i].objective);
            }
          }
          bool proposed = false;
          if (xs.size() >= 2) {
            try {
              const GpModel model = gp_fit(xs, ys, options.gp);
              u = propose_next(model, space, options.n_candidates,
                               util::derive_seed(seed, "propose", static_cast<std::uint64_t>(k)));
              proposed = true;
            } catch (const GpError&) {
              // degenerate design; fall through to a fresh random point
            }
          }
          if (!proposed) {
            util::Rng rng(util::derive_seed(seed, "fallback", static_cast<std::uint64_t>(k)));
            u = lhs_unit(SearchSpace::kDims, 1, rng)[0];
          }
        }
      }

      TrialRecord rec;
      rec.trial_id = k;
      rec.hp = space.decode(u, base);
      rec.seed = util::derive_seed(seed, "trial", static_cast<std::uint64_t>(k));
      const auto t0 = std::chrono::steady_clock::now();
      try {
        rec.objective = objective(rec.hp, rec.seed);
        rec.status = std::isfinite(rec.objective) ? TrialRecord::Status::completed
                                                  : TrialRecord::Status::failed;
        if (rec.status == TrialRecord::Status::failed) rec.error = "non-finite objective";
      } catch (const std::exception& e) {
        rec.status = TrialRecord::Status::failed;
        rec.error = e.what();
      }
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      {
        std::lock_guard<std::mutex> lock(mu);
        result.records[k] = std::move(rec);
        recorded[k] = 1;
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::min(jobs, M));
    for (int j = 0; j < std::min(jobs, M); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  double best_obj = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < M; ++i) {
    const auto& r = result.records[i];
    if (r.status == TrialRecord::Status::completed && r.objective > best_obj) {
      best_obj = r.objective;
      result.best_index = i;
    }
  }
  if (result.best_index < 0) throw AllTrialsFailed("run_trials: every trial failed");
  return result;
}

}  // namespace mmg::tune

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kerrbeam/error.hpp"
#include "kerrbeam/twa/solver.hpp"
#include "kerrbeam/twa/state.hpp"

namespace kerrbeam::twa {

struct TrajectoryFailure {
  std::size_t index = 0;
  std::string message;
};

template <class Record>
struct EnsembleResult {
  std::vector<std::optional<Record>> records;  // indexed by trajectory
  std::vector<TrajectoryFailure> failures;     // sorted by index

  std::size_t completed() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.has_value(); }));
  }
};

inline constexpr double kMaxFailureFraction = 0.01;

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs spec.n_traj independent trajectories. make_worker() is called once per
/// thread and must return a callable Record(std::size_t index); per-thread
/// state (FFT plans, scratch) lives in that callable. Since every record
/// depends only on its index, results do not depend on the thread count.
///
/// A throwing trajectory is recorded as a failure. Once more than
/// max_failure_fraction of the ensemble has failed the run stops and throws
/// StepFailure with the first diagnostics.
template <class Record, class MakeWorker>
EnsembleResult<Record> run_ensemble(const EnsembleSpec& spec, unsigned threads, MakeWorker&& make_worker,
                                    double max_failure_fraction = kMaxFailureFraction) {
  spec.validate();
  const std::size_t n = spec.n_traj;
  const auto allowed = static_cast<std::size_t>(std::floor(max_failure_fraction * static_cast<double>(n)));

  EnsembleResult<Record> result;
  result.records.resize(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::mutex failure_mutex;
  std::exception_ptr setup_error;

  auto work = [&] {
    try {
      auto worker = make_worker();
      for (;;) {
        if (aborted.load()) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          result.records[i].emplace(worker(i));
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          result.failures.push_back({i, e.what()});
          if (result.failures.size() > allowed) aborted.store(true);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!setup_error) setup_error = std::current_exception();
      aborted.store(true);
    }
  };

  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (setup_error) std::rethrow_exception(setup_error);

  std::sort(result.failures.begin(), result.failures.end(),
            [](const TrajectoryFailure& a, const TrajectoryFailure& b) { return a.index < b.index; });
  if (result.failures.size() > allowed) {
    std::ostringstream msg;
    msg << "ensemble aborted: " << result.failures.size() << " of " << n << " trajectories failed";
    for (std::size_t k = 0; k < std::min<std::size_t>(3, result.failures.size()); ++k)
      msg << "; trajectory " << result.failures[k].index << ": " << result.failures[k].message;
    throw StepFailure(msg.str());
  }
  return result;
}

/// Everything one trajectory of a TWA run needs.
struct TwaRun {
  RamanConfig config;
  Grid1D grid{-40e-6, 260e-6, 2048};
  SolverOptions solver;
  double t_final = 15e-3;
  double dt = 1e-6;
  std::vector<double> observe_times;
};

/// Noise-seeded initial state for trajectory `index`, evolved through the run.
/// observer(time_index, state) returns nothing; the caller collects records.
template <class Observer>
EvolveReport run_trajectory(Propagator& prop, const TwaRun& run, std::uint64_t master_seed, std::size_t index,
                            Observer&& observer) {
  auto rng = trajectory_stream(master_seed, index);
  TrajectoryState s = initial_state(run.grid, run.config, &rng, run.solver.beam_frame_k);
  return prop.evolve(s, run.t_final, run.dt, run.observe_times, std::forward<Observer>(observer));
}

}  // namespace kerrbeam::twa

#pragma once

// Executable bounded pipeline: p stage workers connected by single-slot
// channels, sharing a pool of q device permits. Runs either as a
// deterministic discrete-event simulation in virtual time or as real threads
// measured against the wall clock.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bpl/model.hpp"

namespace bpl {

enum class SimMode { virtual_time, wallclock };

inline const char* to_string(SimMode m) {
  return m == SimMode::virtual_time ? "virtual" : "wallclock";
}

struct StageInterval {
  std::int64_t element = 0;
  std::int64_t stage = 0;
  double start = 0.0;
  double end = 0.0;
};

struct SimRun {
  PipelineConfig config;
  std::int64_t elements = 0;
  SimMode mode = SimMode::virtual_time;
  std::vector<StageInterval> timeline;  // element-major, stage-minor when complete
  double total_time = 0.0;
  bool completed = true;
  std::string diagnostic;

  std::vector<StageInterval> intervals_of(std::int64_t element) const {
    std::vector<StageInterval> out;
    for (const auto& iv : timeline)
      if (iv.element == element) out.push_back(iv);
    return out;
  }
};

struct ChannelSpec {
  std::int64_t capacity = 1;

  void validate() const {
    if (capacity != 1) throw invalid_config("only single-slot channels are supported");
  }
};

/// Largest number of intervals covering a common instant; intervals are
/// half-open, so one ending exactly where another starts does not overlap it.
inline std::int64_t max_concurrency(const std::vector<StageInterval>& timeline) {
  std::vector<std::pair<double, int>> events;
  events.reserve(timeline.size() * 2);
  for (const auto& iv : timeline) {
    events.emplace_back(iv.start, +1);
    events.emplace_back(iv.end, -1);
  }
  std::sort(events.begin(), events.end());  // -1 sorts before +1 at equal times
  std::int64_t cur = 0;
  std::int64_t best = 0;
  for (const auto& [t, d] : events) {
    cur += d;
    best = std::max(best, cur);
  }
  return best;
}

/// Order in which elements leave the last stage.
inline std::vector<std::int64_t> exit_order(const SimRun& run) {
  std::vector<const StageInterval*> last;
  for (const auto& iv : run.timeline)
    if (iv.stage == run.config.depth) last.push_back(&iv);
  std::stable_sort(last.begin(), last.end(),
                   [](auto* a, auto* b) { return a->end < b->end; });
  std::vector<std::int64_t> out;
  out.reserve(last.size());
  for (auto* iv : last) out.push_back(iv->element);
  return out;
}

/// CSV with header `element,stage,start,end`.
inline std::string timeline_csv(const SimRun& run) {
  std::ostringstream os;
  os.precision(17);
  os << "element,stage,start,end\n";
  for (const auto& iv : run.timeline)
    os << iv.element << ',' << iv.stage << ',' << iv.start << ',' << iv.end << '\n';
  return os.str();
}

/// Discrete-event run in virtual time. Every stage operation holds one device
/// permit for exactly one cycle; freed permits go to deeper stages first.
inline SimRun run_virtual(const PipelineConfig& cfg, std::int64_t n) {
  cfg.validate();
  Workload{n}.validate();
  const auto p = cfg.depth;
  const double h = cycle_time(cfg);

  // latch[s] holds the element written by stage s and not yet read by
  // stage s + 1 (0 = empty). latch[0] is the input feed, latch[p] the sink.
  std::vector<std::int64_t> latch(static_cast<std::size_t>(p) + 1, 0);
  std::vector<std::int64_t> holding(static_cast<std::size_t>(p) + 1, 0);
  std::int64_t next_input = 1;
  std::int64_t permits = std::min(cfg.devices, p);

  using Event = std::pair<std::int64_t, std::int64_t>;  // (finish tick, stage)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> finishes;

  SimRun run;
  run.config = cfg;
  run.elements = n;
  run.mode = SimMode::virtual_time;
  std::vector<StageInterval> timeline(static_cast<std::size_t>(n * p));
  auto slot = [&](std::int64_t e, std::int64_t s) -> StageInterval& {
    return timeline[static_cast<std::size_t>((e - 1) * p + (s - 1))];
  };

  std::int64_t tick = 0;
  std::int64_t last_tick = 0;
  while (true) {
    for (std::int64_t s = p; s >= 1 && permits > 0; --s) {
      const auto si = static_cast<std::size_t>(s);
      if (holding[si] != 0) continue;
      const bool has_input = s == 1 ? next_input <= n : latch[si - 1] != 0;
      const bool out_free = s == p || latch[si] == 0;
      if (!has_input || !out_free) continue;
      std::int64_t e = 0;
      if (s == 1) {
        e = next_input++;
      } else {
        e = std::exchange(latch[si - 1], 0);
      }
      holding[si] = e;
      --permits;
      slot(e, s) = {e, s, static_cast<double>(tick) * h, static_cast<double>(tick + 1) * h};
      finishes.emplace(tick + 1, s);
    }
    if (finishes.empty()) break;
    tick = finishes.top().first;
    while (!finishes.empty() && finishes.top().first == tick) {
      const auto si = static_cast<std::size_t>(finishes.top().second);
      finishes.pop();
      if (si != static_cast<std::size_t>(p)) latch[si] = holding[si];
      holding[si] = 0;
      ++permits;
    }
    last_tick = tick;
  }
  run.timeline = std::move(timeline);
  run.total_time = static_cast<double>(last_tick) * h;
  return run;
}

namespace detail {

// Blocking single-slot channel with deadline-aware put/take and cancellation.
template <class T>
class SlotChannel {
 public:
  using Clock = std::chrono::steady_clock;

  bool put(T value, Clock::time_point deadline, const std::atomic<bool>& abort) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_until(lk, deadline, [&] { return !slot_ || abort.load(); })) return false;
    if (abort.load()) return false;
    slot_ = std::move(value);
    cv_.notify_all();
    return true;
  }

  std::optional<T> take(Clock::time_point deadline, const std::atomic<bool>& abort) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_until(lk, deadline, [&] { return slot_.has_value() || abort.load(); }))
      return std::nullopt;
    if (abort.load()) return std::nullopt;
    auto v = std::move(slot_);
    slot_.reset();
    cv_.notify_all();
    return v;
  }

  void wake() {
    std::lock_guard lk(mu_);
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<T> slot_;
};

// Sleep most of the interval, then spin the remainder for sub-millisecond
// accuracy.
inline void hold_for(std::chrono::steady_clock::duration d) {
  const auto until = std::chrono::steady_clock::now() + d;
  const auto coarse = until - std::chrono::microseconds(300);
  if (coarse > std::chrono::steady_clock::now()) std::this_thread::sleep_until(coarse);
  while (std::chrono::steady_clock::now() < until) std::this_thread::yield();
}

}  // namespace detail

struct WallclockOptions {
  double scale_ms = 1.0;                  // wall milliseconds per time unit
  std::chrono::milliseconds timeout{60000};
};

/// Real multithreaded run: one thread per stage, reading from its input
/// channel, holding a device permit while it works for one cycle, then
/// writing to its output channel. Times are reported in time units.
inline SimRun run_wallclock(const PipelineConfig& cfg, std::int64_t n,
                            const WallclockOptions& opts = {}) {
  cfg.validate();
  Workload{n}.validate();
  if (!(opts.scale_ms > 0.0)) throw invalid_config("time scale must be > 0");
  using Clock = std::chrono::steady_clock;
  const auto p = cfg.depth;
  const double h_units = cycle_time(cfg);
  const auto work = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(h_units * opts.scale_ms));

  std::vector<detail::SlotChannel<std::int64_t>> channels(static_cast<std::size_t>(p) + 1);
  std::counting_semaphore<> permits(static_cast<std::ptrdiff_t>(std::min(cfg.devices, p)));
  std::atomic<bool> abort{false};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));
  std::vector<std::string> failures(static_cast<std::size_t>(p));

  struct Stamp {
    Clock::time_point start{}, end{};
    bool done = false;
  };
  std::vector<Stamp> stamps(static_cast<std::size_t>(n * p));

  const auto t0 = Clock::now();
  const auto deadline = t0 + opts.timeout;

  auto cancel_all = [&] {
    abort.store(true);
    for (auto& c : channels) c.wake();
  };

  auto worker = [&](std::int64_t s) {
    const auto si = static_cast<std::size_t>(s);
    try {
      for (std::int64_t k = 1; k <= n; ++k) {
        std::int64_t e = k;
        if (s > 1) {
          auto in = channels[si - 1].take(deadline, abort);
          if (!in) {
            if (!abort.load()) failures[si - 1] = "timed out reading input";
            cancel_all();
            return;
          }
          e = *in;
        }
        if (!permits.try_acquire_until(deadline)) {
          failures[si - 1] = "timed out waiting for a device permit";
          cancel_all();
          return;
        }
        auto& st = stamps[static_cast<std::size_t>((e - 1) * p + (s - 1))];
        st.start = Clock::now();
        detail::hold_for(work);
        st.end = Clock::now();
        st.done = true;
        permits.release();
        if (s < p && !channels[si].put(e, deadline, abort)) {
          if (!abort.load()) failures[si - 1] = "timed out writing output";
          cancel_all();
          return;
        }
      }
    } catch (...) {
      errors[si - 1] = std::current_exception();
      cancel_all();
    }
  };

  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(p));
    for (std::int64_t s = 1; s <= p; ++s) threads.emplace_back(worker, s);
  }

  SimRun run;
  run.config = cfg;
  run.elements = n;
  run.mode = SimMode::wallclock;
  const auto to_units = [&](Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(t - t0).count() / opts.scale_ms;
  };
  double first = 0.0;
  double last = 0.0;
  bool any = false;
  for (std::int64_t e = 1; e <= n; ++e)
    for (std::int64_t s = 1; s <= p; ++s) {
      const auto& st = stamps[static_cast<std::size_t>((e - 1) * p + (s - 1))];
      if (!st.done) continue;
      StageInterval iv{e, s, to_units(st.start), to_units(st.end)};
      first = any ? std::min(first, iv.start) : iv.start;
      last = any ? std::max(last, iv.end) : iv.end;
      any = true;
      run.timeline.push_back(iv);
    }
  run.total_time = any ? last - first : 0.0;

  std::ostringstream diag;
  for (std::int64_t s = 1; s <= p; ++s) {
    const auto si = static_cast<std::size_t>(s - 1);
    if (errors[si]) {
      try {
        std::rethrow_exception(errors[si]);
      } catch (const std::exception& ex) {
        diag << "stage " << s << ": " << ex.what() << "; ";
      } catch (...) {
        diag << "stage " << s << ": unknown failure; ";
      }
    } else if (!failures[si].empty()) {
      diag << "stage " << s << ": " << failures[si] << "; ";
    }
  }
  run.diagnostic = diag.str();
  run.completed = run.diagnostic.empty() &&
                  static_cast<std::int64_t>(run.timeline.size()) == n * p;
  const auto cap = std::min(cfg.devices, p);
  if (run.completed && max_concurrency(run.timeline) > cap) {
    run.completed = false;
    run.diagnostic = "capacity invariant violated";
  }
  return run;
}

/// One row of a depth sweep.
struct SweepPoint {
  std::int64_t depth = 0;
  double measured_time = 0.0;
  double model_time = 0.0;
};

/// Runs the pipeline at every depth in [p_lo, p_hi] and pairs each measured
/// time with the bounded-pipeline model.
inline std::vector<SweepPoint> empirical_depth_sweep(std::int64_t q, std::int64_t n, double t_p,
                                                     double t_o, std::int64_t p_lo,
                                                     std::int64_t p_hi, SimMode mode,
                                                     const WallclockOptions& opts = {}) {
  if (p_lo < 1 || p_hi < p_lo) throw invalid_config("depth range must be nonempty and >= 1");
  std::vector<SweepPoint> out;
  for (std::int64_t p = p_lo; p <= p_hi; ++p) {
    const PipelineConfig cfg{p, q, t_p, t_o};
    SimRun run = mode == SimMode::virtual_time ? run_virtual(cfg, n) : run_wallclock(cfg, n, opts);
    if (!run.completed)
      throw std::runtime_error("simulation at depth " + std::to_string(p) +
                               " failed: " + run.diagnostic);
    out.push_back({p, run.total_time, bounded_time(cfg, Workload{n})});
  }
  return out;
}

}  // namespace bpl

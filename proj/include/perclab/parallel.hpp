#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace perclab {

/// Samples are cut into fixed-size chunks that do not depend on the worker
/// count. Each chunk is reduced into its own accumulator and the accumulators
/// are merged in chunk order, so results are bit-identical for any number of
/// workers.
inline constexpr std::uint64_t kChunkSize = 4096;

/// Runs `body(acc, begin, end)` over chunks of [0, count) and folds the chunk
/// accumulators left to right with `merge(total, chunk)`.
template <class Acc, class Body, class Merge>
Acc sharded_reduce(std::uint64_t count, unsigned workers, const Acc& init, Body&& body,
                   Merge&& merge, std::uint64_t chunk = kChunkSize) {
  const std::uint64_t chunks = (count + chunk - 1) / chunk;
  workers = std::max(1U, workers);
  Acc total = init;
  auto run = [&](Acc& acc, std::uint64_t c) {
    const std::uint64_t begin = c * chunk;
    body(acc, begin, std::min(count, begin + chunk));
  };
  if (workers == 1 || chunks <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) {
      Acc part = init;
      run(part, c);
      merge(total, part);
    }
    return total;
  }
  // waves of `workers` chunks keep at most workers + 1 accumulators alive
  for (std::uint64_t wave = 0; wave < chunks; wave += workers) {
    const std::uint64_t n = std::min<std::uint64_t>(workers, chunks - wave);
    std::vector<Acc> partial(n, init);
    std::vector<std::exception_ptr> failure(n);
    std::vector<std::thread> pool;
    for (std::uint64_t i = 0; i < n; ++i) {
      pool.emplace_back([&, i]() {
        try {
          run(partial[i], wave + i);
        } catch (...) {
          failure[i] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failure) {
      if (f) std::rethrow_exception(f);
    }
    for (auto& p : partial) merge(total, p);
  }
  return total;
}

/// Applies `fn(i)` for i in [0, count) across workers; fn must write only to
/// slot i of caller-owned storage.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned workers, Fn&& fn) {
  struct Unit {};
  sharded_reduce(
      count, workers, Unit{},
      [&](Unit&, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) fn(i);
      },
      [](Unit&, const Unit&) {}, 1);
}

}  // namespace perclab

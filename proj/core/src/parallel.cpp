/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Deterministic data-parallel loops
 *
 ******************************************************************************/
#include "pdfluids/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pdfluids {

int thread_count()
{
  if (const char* env = std::getenv("PDFLUIDS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0)
      return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t begin,
                  std::size_t end,
                  const std::function<void(std::size_t)>& body,
                  std::size_t min_parallel)
{
  const std::size_t n = end > begin ? end - begin : 0;
  const auto workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || n < min_parallel) {
    for (std::size_t i = begin; i < end; ++i)
      body(i);
    return;
  }
  const std::size_t chunks = std::min(workers, n);
  const std::size_t step = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = begin + c * step;
    const std::size_t hi = std::min(end, lo + step);
    if (lo >= hi)
      break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i)
        body(i);
    });
  }
  for (auto& t : pool)
    t.join();
}

}  // namespace pdfluids

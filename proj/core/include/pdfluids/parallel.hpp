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
#pragma once

#include <cstddef>
#include <functional>

namespace pdfluids {

//! Worker count: PDFLUIDS_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

//! Runs body(i) for i in [begin, end). Iterations must write disjoint outputs; the loop
//! is split into contiguous chunks only when the range holds at least `min_parallel`
//! items, so results never depend on the thread count.
void parallel_for(std::size_t begin,
                  std::size_t end,
                  const std::function<void(std::size_t)>& body,
                  std::size_t min_parallel = 4096);

}  // namespace pdfluids

// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace vrft {

/// Selects between the serial reference loop and the OpenMP kernel. Both
/// produce bit-identical results: work items write to their own slots and
/// every reduction runs afterwards in index order.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, n). Exceptions thrown by any item are
/// rethrown on the calling thread (the first one by index wins).
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first;
  std::size_t first_index = n;
  std::mutex mu;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first = std::current_exception();
      }
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace vrft

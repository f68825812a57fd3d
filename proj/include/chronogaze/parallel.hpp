#pragma once

#include <cstddef>
#include <functional>

namespace chronogaze {

/// Process-wide worker bound used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Work items must write to disjoint,
/// preallocated slots so that results never depend on scheduling. Calls made
/// from inside a worker run inline, so nesting never oversubscribes.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace chronogaze

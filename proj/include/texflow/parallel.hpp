#pragma once

#include <functional>

namespace texflow {

// Process-wide worker count; 0 means use hardware concurrency.
void set_worker_threads(int n);
int worker_threads();

// Static row partition across workers. Chunks must only write disjoint
// outputs; results are then independent of the thread count.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

} // namespace texflow

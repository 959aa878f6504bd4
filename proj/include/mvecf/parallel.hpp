#pragma once

#include <functional>

namespace mvecf {

// Global worker cap for the row-parallel loops (ALS half-steps, per-user
// evaluation). Results are schedule-independent: every loop body writes a
// disjoint row, so N=1 and N>1 produce identical output.
void set_threads(int n);
int get_threads();

// Runs body(i) for i in [begin, end), split into contiguous chunks across
// get_threads() workers.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace mvecf

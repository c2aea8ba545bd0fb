#pragma once

#include <functional>

namespace cdist {

// Worker cap from CASCADE_DISTILL_THREADS; missing or unusable values mean 1.
int eval_thread_count();

// Runs fn(0..n-1), splitting the range into contiguous per-thread chunks so
// callers can write results into index i of a preallocated buffer and keep
// input order. With a cap of 1 this is a plain loop. The first exception
// thrown by any chunk is rethrown after all threads join.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace cdist

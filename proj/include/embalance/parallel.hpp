#pragma once

// Ensemble execution for independent member simulations.
//
// Every empirical gramian is a sum over r*s*n (or r*s*p) independent simulations.  Members
// run either serially (the reference path kept for testing) or across OpenMP threads; each
// member writes only its own slot, and accumulation happens afterwards in index order, so
// both paths produce bit-identical results.

#include <cstddef>
#include <exception>
#include <functional>

namespace embalance {

enum class Execution { serial, parallel };

/// Thread cap: EMBALANCE_THREADS when set to a positive integer, else the hardware count.
int thread_count();

/// Runs body(0) ... body(count-1). If any member throws, the exception of the lowest
/// failing index is rethrown after all members finish.
void for_each_member(std::size_t count, const std::function<void(std::size_t)>& body,
                     Execution exec);

}  // namespace embalance

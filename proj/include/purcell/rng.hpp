#pragma once

// Counter-based stream splitting for reproducible parallel Monte Carlo. Work is
// cut into fixed-size blocks; block b always draws from the engine seeded with
// stream_seed(seed, b), so results do not depend on how blocks map to threads.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace purcell::rng {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for substream `stream` of master seed `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

/// Engine for substream `stream`; the state is warmed up by the seed sequence.
Engine make_engine(std::uint64_t seed, std::uint64_t stream);

/// Worker threads used by for_each_block. 0 means hardware concurrency.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Calls fn(block, begin, end) for every block of `block_size` items in
/// [0, count). Blocks run concurrently; fn must only write to its own range.
void for_each_block(std::size_t count, std::size_t block_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace purcell::rng

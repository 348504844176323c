#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace qcg {

// FNV-1a over bytes. Used for prompt fingerprints and cache keys.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

// 16 lowercase hex digits of fnv1a64.
std::string fnv1a64_hex(std::string_view bytes);

// splitmix64 finalizer; decorrelates hash bits before bucketing.
std::uint64_t mix64(std::uint64_t x);

// Runs fn(0..n-1) on up to `threads` workers. Serial when threads <= 1.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

void log_warn(const std::string& msg);

}  // namespace qcg

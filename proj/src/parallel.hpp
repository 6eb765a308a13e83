#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace simruin::detail {

inline constexpr std::uint64_t kBlockPaths = 1024;

// Splits [0, n_paths) into fixed blocks of kBlockPaths and runs fn(first, last, out)
// for each, returning the per-block results in block order. The block layout
// depends on n_paths only, so any reduction done in the returned order is
// identical for every worker count.
template <class Block, class Fn>
std::vector<Block> for_each_block(std::uint64_t n_paths, int workers, const Block& init, Fn fn) {
    const std::uint64_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<Block> blocks(n_blocks, init);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        try {
            for (std::uint64_t b = next++; b < n_blocks; b = next++) {
                const std::uint64_t first = b * kBlockPaths;
                fn(first, std::min(n_paths, first + kBlockPaths), blocks[b]);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_blocks;
        }
    };

    const int n_threads = static_cast<int>(std::min<std::uint64_t>(std::max(workers, 1), std::max<std::uint64_t>(n_blocks, 1)));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return blocks;
}

}  // namespace simruin::detail

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mvcone::detail {

inline unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Splits [0, n) into fixed-size blocks and runs fn(begin, end, block) for
// each. Block boundaries depend only on n and block_size, never on the
// number of workers, so per-block partial results are reproducible.
template <class Fn>
void for_blocks(std::size_t n, std::size_t block_size, unsigned workers, Fn&& fn) {
    const std::size_t blocks = (n + block_size - 1) / block_size;
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(blocks, 1)));
    auto run = [&](unsigned w, std::exception_ptr& err) {
        try {
            for (std::size_t b = w; b < blocks; b += workers) {
                const std::size_t begin = b * block_size;
                fn(begin, std::min(n, begin + block_size), b);
            }
        } catch (...) {
            err = std::current_exception();
        }
    };
    std::vector<std::exception_ptr> errors(workers);
    if (workers == 1) {
        run(0, errors[0]);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w, std::ref(errors[w]));
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mvcone::detail

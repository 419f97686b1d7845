#include "escape/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace escape {

std::size_t worker_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ESCAPE_SPECTRAL_THREADS")) {
        try {
            long cap = std::stol(env);
            if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // ignored: malformed values leave the hardware default in place
        }
    }
    return n;
}

void parallel_chunks(std::size_t count, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    chunks = std::clamp<std::size_t>(chunks, 1, count);
    if (chunks == 1) {
        body(0, count);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(chunks);
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t begin = count * c / chunks;
        std::size_t end = count * (c + 1) / chunks;
        threads.emplace_back([&, c, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace escape

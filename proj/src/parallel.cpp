#include "texflow/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace texflow {

namespace {
std::atomic<int> g_threads{0};
}

void set_worker_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int worker_threads() {
    int n = g_threads.load();
    if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return n > 0 ? n : 1;
}

void parallel_for(int begin, int end, const std::function<void(int)>& body) {
    int n = end - begin;
    if (n <= 0) return;
    int workers = std::min(worker_threads(), n);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    int chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        int lo = begin + w * chunk;
        int hi = std::min(lo + chunk, end);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace texflow

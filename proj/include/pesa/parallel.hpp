#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <variant>
#include <vector>

namespace pesa {

/// Runs job(0..n-1) on at most `workers` threads and calls commit(i, result)
/// on the calling thread in strict index order, as soon as the prefix up to i
/// is complete. Completion order therefore never affects commit order, and
/// committed work survives a cancellation mid-run.
///
/// job exceptions are delivered to commit as an exception_ptr alternative;
/// commit exceptions stop the run and propagate after the pool joins.
/// Returns the number of committed items.
template <typename R, typename Job, typename Commit>
std::size_t ordered_parallel_for(std::size_t n, std::size_t workers, Job job,
                                 Commit commit, const std::atomic<bool>* cancel = nullptr) {
    if (n == 0) return 0;
    workers = std::clamp<std::size_t>(workers, 1, n);

    using Slot = std::variant<R, std::exception_ptr>;
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, Slot> done;
    std::atomic<std::size_t> next{0};
    std::size_t running = workers;

    auto worker = [&] {
        for (;;) {
            if (cancel != nullptr && cancel->load()) break;
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            Slot slot;
            try {
                slot.template emplace<R>(job(i));
            } catch (...) {
                slot = std::current_exception();
            }
            {
                std::lock_guard<std::mutex> lock(mu);
                done.emplace(i, std::move(slot));
            }
            cv.notify_all();
        }
        {
            std::lock_guard<std::mutex> lock(mu);
            --running;
        }
        cv.notify_all();
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

    std::size_t committed = 0;
    std::exception_ptr commit_error;
    {
        std::unique_lock<std::mutex> lock(mu);
        std::size_t pos = 0;
        while (pos < n) {
            cv.wait(lock, [&] { return done.count(pos) > 0 || running == 0; });
            if (done.count(pos) == 0) break;  // cancelled before pos was produced
            auto node = done.extract(pos);
            lock.unlock();
            try {
                if (auto* value = std::get_if<R>(&node.mapped()))
                    commit(pos, std::move(*value));
                else
                    commit(pos, std::get<std::exception_ptr>(node.mapped()));
            } catch (...) {
                commit_error = std::current_exception();
            }
            lock.lock();
            if (commit_error) break;
            ++pos;
            ++committed;
        }
    }
    for (auto& t : pool) t.join();
    if (commit_error) std::rethrow_exception(commit_error);
    return committed;
}

}  // namespace pesa

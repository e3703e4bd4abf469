#ifndef RESISTNET_PARALLEL_HPP
#define RESISTNET_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace resistnet
{

inline unsigned resolve_workers(unsigned workers)
{
    if (workers > 0)
        return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(begin, end) on contiguous chunks of [0, count). Results must be
/// written by index so the outcome does not depend on the worker count.
/// The exception from the lowest-numbered failing chunk is rethrown.
template <class Fn>
void parallel_chunks(std::size_t count, unsigned workers, Fn&& fn)
{
    const auto w = static_cast<std::size_t>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(count, 1)));
    if (w <= 1) {
        fn(std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(w);
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t begin = count * t / w;
        const std::size_t end = count * (t + 1) / w;
        threads.emplace_back([&, t, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    parallel_chunks(count, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            fn(i);
    });
}

} // namespace resistnet

#endif // RESISTNET_PARALLEL_HPP

#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace iontomo {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

// Thrown for arguments that violate a documented precondition.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a computation ran but its result failed a numerical sanity bound.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Compensated (Kahan) accumulator; summation order is part of the output contract.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

struct KahanSumC {
    KahanSum re, im;
    void add(cplx z) {
        re.add(z.real());
        im.add(z.imag());
    }
    cplx value() const { return {re.value(), im.value()}; }
};

// Runs fn(i) for i in [0, n).  Entries must be independent; with threads > 1 the
// index range is split into contiguous chunks, so per-entry evaluation order is
// unchanged and results do not depend on the thread count.  The first worker
// exception is rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < nt; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace iontomo

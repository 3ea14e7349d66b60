// SPDX-License-Identifier: Apache-2.0
#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace gkp::detail {

namespace {

using Key = std::tuple<int, int, int, int, int>;

struct PlanCache {
    std::mutex mutex;
    std::map<Key, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

fftw_plan get_plan(int n, int howmany, int stride, int dist, int sign) {
    PlanCache& c = cache();
    const Key key{n, howmany, stride, dist, sign};
    std::lock_guard<std::mutex> lock(c.mutex);
    if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
    const std::size_t extent =
        static_cast<std::size_t>(howmany - 1) * dist + static_cast<std::size_t>(n - 1) * stride + 1;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * extent));
    if (buf == nullptr) throw std::bad_alloc();
    fftw_plan plan = fftw_plan_many_dft(1, &n, howmany, buf, nullptr, stride, dist, buf, nullptr, stride, dist, sign,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) throw std::runtime_error("fftw: planning failed");
    c.plans.emplace(key, plan);
    return plan;
}

}  // namespace

void fft_inplace(std::complex<double>* data, int n, int howmany, int stride, int dist, int sign) {
    fftw_plan plan = get_plan(n, howmany, stride, dist, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
}

}  // namespace gkp::detail

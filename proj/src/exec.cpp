#include "nfr/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>

namespace nfr::exec {

namespace {
std::atomic<bool> g_parallel{[] {
    const char* env = std::getenv("NFR_SERIAL");
    return !(env && env[0] == '1');
}()};
}

void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

bool parallel() { return g_parallel.load(std::memory_order_relaxed); }

int num_threads() {
#ifdef _OPENMP
    return parallel() ? omp_get_max_threads() : 1;
#else
    return 1;
#endif
}

}  // namespace nfr::exec

#include "adsrc/kernels.hpp"

#include <cstring>

namespace adsrc::kernels {

namespace {

bool avx2_available() {
#if defined(ADSRC_ENABLE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const char* g_backend = "scalar";

void use_scalar() {
    dot = scalar::dot;
    weighted_dot = scalar::weighted_dot;
    axpy = scalar::axpy;
    axpby = scalar::axpby;
    scale = scalar::scale;
    csr_spmv = scalar::csr_spmv;
    g_backend = "scalar";
}

#ifdef ADSRC_ENABLE_AVX2
void use_avx2() {
    dot = avx2::dot;
    weighted_dot = avx2::weighted_dot;
    axpy = avx2::axpy;
    axpby = avx2::axpby;
    scale = avx2::scale;
    csr_spmv = avx2::csr_spmv;
    g_backend = "avx2";
}
#endif

struct Init {
    Init() {
#ifdef ADSRC_ENABLE_AVX2
        if (avx2_available()) {
            use_avx2();
            return;
        }
#endif
        use_scalar();
    }
};

}  // namespace

DotFn dot = scalar::dot;
WeightedDotFn weighted_dot = scalar::weighted_dot;
AxpyFn axpy = scalar::axpy;
AxpbyFn axpby = scalar::axpby;
ScaleFn scale = scalar::scale;
CsrSpmvFn csr_spmv = scalar::csr_spmv;

namespace {
Init g_init;
}

const char* backend_name() { return g_backend; }

bool force_backend(const char* name) {
    if (std::strcmp(name, "scalar") == 0) {
        use_scalar();
        return true;
    }
#ifdef ADSRC_ENABLE_AVX2
    if (std::strcmp(name, "avx2") == 0 && avx2_available()) {
        use_avx2();
        return true;
    }
#endif
    return false;
}

}  // namespace adsrc::kernels

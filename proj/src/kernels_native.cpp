#include "kernel_impl.hpp"

namespace tersoff::detail {

#if defined(TERSOFF_NATIVE_SIMD)
TERSOFF_INSTANTIATE_VEC(float, simd::native_width<float>, simd::FastMath)
TERSOFF_INSTANTIATE_VEC(double, simd::native_width<double>, simd::FastMath)
#endif

}  // namespace tersoff::detail

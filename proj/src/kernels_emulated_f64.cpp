#include "kernel_impl.hpp"

namespace tersoff::detail {

TERSOFF_FOR_EMULATED_WIDTHS(TERSOFF_INSTANTIATE_VEC, double)

}  // namespace tersoff::detail

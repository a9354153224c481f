#pragma once

#include <limits>
#include <type_traits>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace ssea {

// 128-bit significand binary float; expression templates off so that it
// composes with Dual and Series1 like a plain value type.
using ext128 = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<128, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

template <typename T>
constexpr int significand_bits() {
    if constexpr (std::is_same_v<T, double>) return 53;
    else return std::numeric_limits<T>::digits;
}

template <typename T>
inline double to_double(const T& x) { return static_cast<double>(x); }

}  // namespace ssea

#ifndef PT__VERSION_HPP_
#define PT__VERSION_HPP_

namespace pt
{

inline constexpr const char * kToolVersion = "0.1.0";

}  // namespace pt

#endif  // PT__VERSION_HPP_

#ifndef VARPG_VERSION_HPP
#define VARPG_VERSION_HPP

namespace varpg {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

}  // namespace varpg

#endif  // VARPG_VERSION_HPP

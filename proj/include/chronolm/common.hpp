#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chronolm {

using Eigen::Index;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;

// Error taxonomy mapped onto CLI exit codes (usage errors are handled by the
// argument parser itself).
struct IoError : std::runtime_error {          // missing/unreadable input -> exit 3
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {      // malformed input file -> exit 4
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {      // inconsistent configuration -> exit 4
  using std::runtime_error::runtime_error;
};
struct RuntimeError : std::runtime_error {     // divergence, sequencing, ... -> exit 5
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingInput = 3;
inline constexpr int kExitBadInput = 4;
inline constexpr int kExitRuntime = 5;

}  // namespace chronolm

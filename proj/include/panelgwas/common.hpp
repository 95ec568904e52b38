#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace panelgwas {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Internal missing-dosage / missing-value sentinel.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// Fatal input or configuration problem. Carries a message meant for the user.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file is malformed or inconsistent with its companions.
class FormatError : public Error {
 public:
  using Error::Error;
};

// BGEN feature outside the supported subset.
class UnsupportedFeature : public Error {
 public:
  explicit UnsupportedFeature(const std::string& feature)
      : Error("unsupported BGEN feature: " + feature) {}
};

}  // namespace panelgwas

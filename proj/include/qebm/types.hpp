#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qebm {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using Matrix2c = Eigen::Matrix2cd;

using Symbol = std::uint8_t;  // 1-based outcome symbol, 1..q

// Size guards. Dense states and enumerated outcome tables refuse to grow past
// these; callers that need more must use the sampled paths.
inline constexpr int kMaxDensityQubits = 14;
inline constexpr int kMaxPureQubits = 20;
inline constexpr std::uint64_t kMaxTableEntries = std::uint64_t{1} << 24;

enum class ErrorKind {
  config,        // bad spec, bad hyperparameters, schema mismatch
  optimization,  // fit diverged or produced non-finite values
  span,          // observable/fidelity outside the POVM span, non-IC duals
  io,            // unreadable, unwritable or corrupt files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) fail(kind, msg);
}

}  // namespace qebm

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace defrag {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;

enum class Task { regression, classification };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document (ensemble, model, rule or CSV file).
class ParseError : public Error {
public:
    using Error::Error;
};

// Probability floor applied to eta, gamma and alpha inside every log evaluation.
inline constexpr double kProbFloor = 1e-6;
inline constexpr double kPrecisionFloor = 1e-8;
inline constexpr double kVarianceFloor = 1e-12;

// Non-fatal diagnostics. The default sink writes to stderr; tests and the CLI
// may swap it out.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace defrag

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace ssn {

/// One row per snippet, one column per feature channel.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an input file does not follow its schema. `where()` is a JSON
/// pointer or byte offset, `line()` is 1-based or 0 when not applicable.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& file, const std::string& where, std::size_t line, const std::string& what);

    const std::string& file() const noexcept { return file_; }
    const std::string& where() const noexcept { return where_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::string where_;
    std::size_t line_ = 0;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ssn

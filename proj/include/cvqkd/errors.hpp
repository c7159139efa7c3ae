#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

/// Base class of all library exceptions.
class error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Input rejected before any computation (bad value, bad dimensions,
/// malformed file, failed constraint). Maps to CLI exit code 1.
class validation_category : public error {
 public:
    using error::error;
};

/// Computation started but could not produce a meaningful result
/// (solver failure, unphysical intermediate, no root in range).
/// Maps to CLI exit code 2.
class numeric_category : public error {
 public:
    using error::error;
};

class invalid_argument : public validation_category {
 public:
    using validation_category::validation_category;
};

/// Config-file syntax problem, annotated with line/column.
class parse_error : public validation_category {
 public:
    parse_error(const std::string& what, int line, int column)
        : validation_category(what + " (line " + std::to_string(line) +
                              ", column " + std::to_string(column) + ")"),
          line_(line),
          column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

 private:
    int line_;
    int column_;
};

/// A well-formed config whose content violates a field constraint.
class validation_error : public validation_category {
 public:
    using validation_category::validation_category;
};

class io_error : public validation_category {
 public:
    using validation_category::validation_category;
};

class numeric_failure : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

/// A symplectic eigenvalue below the physical floor of 1.
class unphysical_eigenvalue : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

/// A constructed covariance matrix that violates the uncertainty principle.
class unphysical_state : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

/// Shot-noise calibration with a vanishing normalization integral.
class degenerate_calibration : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

/// Orthogonal complement requested for two (nearly) identical modes.
class degenerate_complement : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

/// Root-finder found no sign change in the admissible range.
class no_crossing : public numeric_category {
 public:
    using numeric_category::numeric_category;
};

}  // namespace cvqkd

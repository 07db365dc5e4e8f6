#pragma once

#include <stdexcept>
#include <string>

namespace pbcs {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class dimension_error : public error {
public:
    using error::error;
};

class singular_matrix_error : public error {
public:
    using error::error;
};

class non_convergence_error : public error {
public:
    using error::error;
};

class overflow_error : public error {
public:
    using error::error;
};

/// The dominant eigenvalue is not simple, so the Perron data required by the
/// maximum principle is not well defined.
class not_simple_error : public error {
public:
    using error::error;
};

class invalid_system_error : public error {
public:
    using error::error;
};

class invalid_control_error : public error {
public:
    using error::error;
};

class invalid_interval_error : public error {
public:
    using error::error;
};

class bad_index_error : public error {
public:
    using error::error;
};

class not_symmetric_error : public error {
public:
    using error::error;
};

class too_few_arcs_error : public error {
public:
    using error::error;
};

class horizon_too_short_error : public error {
public:
    using error::error;
};

class budget_exceeded_error : public error {
public:
    using error::error;
};

/// Malformed input document (bad JSON shape, missing or mistyped fields).
class input_error : public error {
public:
    using error::error;
};

}  // namespace pbcs

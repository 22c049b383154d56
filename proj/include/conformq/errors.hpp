#ifndef CONFORMQ_ERRORS_HPP
#define CONFORMQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace conformq
{

// Root of every exception thrown by the library.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Operands live on charts of different dimension, or tensor shapes disagree.
class dimension_error : public error
{
public:
    using error::error;
};

// A jet does not carry enough Taylor coefficients for the requested operation.
class order_error : public error
{
public:
    using error::error;
};

// The requested value has no exact rational representation (e.g. exp(1), 2^(1/2)).
class exactness_error : public error
{
public:
    using error::error;
};

// Argument outside the domain of an operation (zero constant term, non-positive base, ...).
class domain_error : public error
{
public:
    using error::error;
};

// A symbol handed to the quantization is not trace-free.
class trace_error : public error
{
public:
    using error::error;
};

// A shift value delta makes some gamma_n vanish where it is used as a denominator.
class criticality_error : public error
{
public:
    criticality_error(const std::string &msg, int gamma_index) : error(msg), m_gamma_index(gamma_index) {}

    int gamma_index() const noexcept
    {
        return m_gamma_index;
    }

private:
    int m_gamma_index;
};

// Malformed configuration input.
class config_error : public error
{
public:
    using error::error;
};

} // namespace conformq

#endif

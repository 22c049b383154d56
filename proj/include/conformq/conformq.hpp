#ifndef CONFORMQ_CONFORMQ_HPP
#define CONFORMQ_CONFORMQ_HPP

#include <conformq/errors.hpp>
#include <conformq/scalar.hpp>
#include <conformq/jet.hpp>
#include <conformq/tensor.hpp>
#include <conformq/linalg.hpp>
#include <conformq/metric.hpp>
#include <conformq/calculus.hpp>
#include <conformq/coefficients.hpp>
#include <conformq/expansion.hpp>
#include <conformq/quantize.hpp>
#include <conformq/harness.hpp>
#include <conformq/config.hpp>

#endif

#pragma once

#include <stdexcept>
#include <string>

namespace fqweil
{

// Error taxonomy shared across the library.  Every failure mode a caller can
// provoke has its own type so tests can assert on the exact condition.

struct IncompatibleOrder : std::invalid_argument
{
    explicit IncompatibleOrder(const std::string& what) : std::invalid_argument(what) {}
};

struct DivisionByZero : std::domain_error
{
    explicit DivisionByZero(const std::string& what) : std::domain_error(what) {}
};

struct UnsupportedExponent : std::invalid_argument
{
    explicit UnsupportedExponent(const std::string& what) : std::invalid_argument(what) {}
};

struct DegenerateLattice : std::invalid_argument
{
    explicit DegenerateLattice(const std::string& what) : std::invalid_argument(what) {}
};

struct NotEven : std::invalid_argument
{
    explicit NotEven(const std::string& what) : std::invalid_argument(what) {}
};

struct MembershipViolation : std::invalid_argument
{
    explicit MembershipViolation(const std::string& what) : std::invalid_argument(what) {}
};

struct NonDivisible : std::domain_error
{
    explicit NonDivisible(const std::string& what) : std::domain_error(what) {}
};

struct PrecisionViolation : std::invalid_argument
{
    explicit PrecisionViolation(const std::string& what) : std::invalid_argument(what) {}
};

struct PrecisionInsufficient : std::invalid_argument
{
    explicit PrecisionInsufficient(const std::string& what) : std::invalid_argument(what) {}
};

struct PNotOdd : std::invalid_argument
{
    explicit PNotOdd(const std::string& what) : std::invalid_argument(what) {}
};

struct RangeError : std::out_of_range
{
    explicit RangeError(const std::string& what) : std::out_of_range(what) {}
};

struct BudgetExceeded : std::runtime_error
{
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefinite : std::invalid_argument
{
    explicit NotPositiveDefinite(const std::string& what) : std::invalid_argument(what) {}
};

struct ModuleMismatch : std::invalid_argument
{
    explicit ModuleMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct WeightMismatch : std::invalid_argument
{
    explicit WeightMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct NotADivisor : std::invalid_argument
{
    explicit NotADivisor(const std::string& what) : std::invalid_argument(what) {}
};

struct NotCoprime : std::invalid_argument
{
    explicit NotCoprime(const std::string& what) : std::invalid_argument(what) {}
};

struct WitnessNotFound : std::runtime_error
{
    explicit WitnessNotFound(const std::string& what) : std::runtime_error(what) {}
};

struct SchemaError : std::invalid_argument
{
    explicit SchemaError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace fqweil

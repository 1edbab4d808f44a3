#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siftroth {

enum class Errc {
    invalid_argument,
    degenerate_polynomial,
    containment_violation,
    undefined_density,
    not_squarefree,
    infinite_product,
    domain,
    empty_set,
    no_prime_in_interval,
    injectivity_violation,
    modulus_mismatch,
    guard_exceeded,
    not_invertible,
    out_of_table,
    saturation,
    degenerate_epsilon,
    support_violation,
    parse,
    io,
};

constexpr std::string_view to_string(Errc e) noexcept
{
    switch (e) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::degenerate_polynomial: return "degenerate polynomial";
    case Errc::containment_violation: return "containment violation";
    case Errc::undefined_density: return "undefined density";
    case Errc::not_squarefree: return "not squarefree";
    case Errc::infinite_product: return "infinite product";
    case Errc::domain: return "domain error";
    case Errc::empty_set: return "empty set";
    case Errc::no_prime_in_interval: return "no prime in interval";
    case Errc::injectivity_violation: return "injectivity violation";
    case Errc::modulus_mismatch: return "modulus mismatch";
    case Errc::guard_exceeded: return "enumeration guard exceeded";
    case Errc::not_invertible: return "not invertible";
    case Errc::out_of_table: return "out of table";
    case Errc::saturation: return "saturation";
    case Errc::degenerate_epsilon: return "degenerate epsilon";
    case Errc::support_violation: return "support violation";
    case Errc::parse: return "parse error";
    case Errc::io: return "I/O error";
    }
    return "unknown";
}

/// Every library failure is reported through this type; code() names the
/// contract that was violated.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// An Error raised inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner)
        : Error(inner.code(), "[" + stage + "] " + inner.what()), stage_(std::move(stage))
    {
    }

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace siftroth

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace delayscale {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input: empty samplers, bad ranges, violated preconditions.
class InvalidSpec : public Error {
  public:
    using Error::Error;
};

class IntegrationBlowUp : public Error {
  public:
    IntegrationBlowUp(const std::string& what, std::size_t component)
        : Error(what), component_(component) {}
    [[nodiscard]] std::size_t component() const noexcept { return component_; }

  private:
    std::size_t component_;
};

class SynthesisFailure : public Error {
  public:
    SynthesisFailure(const std::string& what, std::vector<double> worst_rho)
        : Error(what), worst_rho_(std::move(worst_rho)) {}
    [[nodiscard]] const std::vector<double>& worst_rho() const noexcept { return worst_rho_; }

  private:
    std::vector<double> worst_rho_;
};

class NumericFailure : public Error {
  public:
    NumericFailure(const std::string& what, std::string term)
        : Error(what), term_(std::move(term)) {}
    [[nodiscard]] const std::string& term() const noexcept { return term_; }

  private:
    std::string term_;
};

class HistoryUnderflow : public Error {
  public:
    HistoryUnderflow(const std::string& what, double tau) : Error(what), tau_(tau) {}
    [[nodiscard]] double tau() const noexcept { return tau_; }

  private:
    double tau_;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace delayscale

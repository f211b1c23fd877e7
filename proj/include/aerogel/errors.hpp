#pragma once

#include <stdexcept>
#include <string>

namespace aerogel {

//! A computation ran but did not reach a trustworthy answer (non-convergence,
//! divergence, loss of positivity). Input validation errors use
//! std::invalid_argument instead.
class NumericalFailure : public std::runtime_error {
public:
  explicit NumericalFailure(const std::string &what)
      : std::runtime_error(what) {}
};

} // namespace aerogel

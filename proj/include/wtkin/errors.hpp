#pragma once

#include <stdexcept>
#include <string>

namespace wtkin {

// Parameter / precondition violations map to std::invalid_argument,
// out-of-domain evaluations to std::domain_error.  The two below carry
// additional meaning for the CLI exit codes.

// A fit was requested on data that is not in the asymptotic regime
// (e.g. blow-up time estimation without enough growth).
struct not_in_asymptotic_regime : std::runtime_error {
    explicit not_in_asymptotic_regime(const std::string& what)
        : std::runtime_error(what) {}
};

// A Monte-Carlo estimate could not be formed (too few admissible samples).
struct statistics_error : std::runtime_error {
    explicit statistics_error(const std::string& what)
        : std::runtime_error(what) {}
};

// Regression / profile fit failure (nonpositive data in window, ...).
struct fit_error : std::runtime_error {
    explicit fit_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wtkin

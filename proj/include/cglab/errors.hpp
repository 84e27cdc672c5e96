#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cglab {

// Config / input problems. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, factorization breakdown, degenerate
// geometry discovered mid-pipeline). CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Arc routing on the base sphere failed; names the offending pair.
class ArcRoutingError : public NumericalError {
public:
    ArcRoutingError(const std::string& msg, int arc_a, int arc_b)
        : NumericalError(msg), pair_a(arc_a), pair_b(arc_b) {}
    int pair_a, pair_b;
};

// Cutting along a separating loop would disconnect the cyclic cover.
class SeparatingLoopError : public ValidationError {
public:
    explicit SeparatingLoopError(const std::string& msg) : ValidationError(msg) {}
};

// The hemisphere condition fails: no admissible u in V_phi. Carries the
// hull certificate (indices + convex weights with sum(w_i * x_i) = 0).
class NoAdmissibleU : public std::runtime_error {
public:
    NoAdmissibleU(const std::string& msg, std::vector<int> subset, std::vector<double> weights,
                  double margin)
        : std::runtime_error(msg), certificate_subset(std::move(subset)),
          certificate_weights(std::move(weights)), margin(margin) {}
    std::vector<int> certificate_subset;
    std::vector<double> certificate_weights;
    double margin;
};

// Dilaton smoothness obstruction: kappa = 0 with u <= 0.
class PositivityFailure : public NumericalError {
public:
    explicit PositivityFailure(const std::string& msg) : NumericalError(msg) {}
};

// Output directory / file problems. CLI exit code 5.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cglab

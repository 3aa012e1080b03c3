#pragma once

// Request/result envelopes exchanged by the command-line tool, and the
// re-derivation of every residual that `verify` performs on them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccomm/encoder_solver.hpp"
#include "ccomm/identity_encoder.hpp"

namespace ccomm::cli {

inline constexpr const char* kEnvelopeVersion = "ccomm-envelope/1";

enum class Mode { Identity, Integrator };

struct SolveRequest {
    Mode mode = Mode::Integrator;
    // integrator
    int order = 1;
    int degree = 1;
    std::vector<double> terminal;
    encoder::SeparationMetric metric = encoder::SeparationMetric::RForm;
    // identity
    linalg::Matrix L;
    std::vector<double> target;
    // shared
    int messages = 1;
    double epsilon = 1.0;
    encoder::SolverConfig config;
    int trajectory_samples = 101;

    /// Re-checks the target module's shape constraints.
    void validate() const;
};

nlohmann::json request_to_json(const SolveRequest& r);
SolveRequest request_from_json(const nlohmann::json& j);

/// Solves and packages the result. Throws CapacityError / SolverError.
nlohmann::json encode(const SolveRequest& r);

struct VerifyReport {
    bool ok = true;
    std::vector<std::string> failures;
    double max_endpoint_residual = 0.0;
    double max_separation_error = 0.0;  // relative to eps^2
    double cost_identity_error = 0.0;   // relative to max(1, cost)
};

/// Recomputes endpoint residuals, separations and the cost identity from the
/// request echo and the control coefficients alone, and compares them with
/// the tolerances and with the residuals stored in the envelope.
VerifyReport verify(const nlohmann::json& envelope);

/// Tolerances applied by verify.
inline constexpr double kEndpointTolerance = 1e-8;
inline constexpr double kSeparationTolerance = 1e-8;
inline constexpr double kCostTolerance = 1e-8;

nlohmann::json matrix_to_json(const linalg::Matrix& m);
linalg::Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const linalg::Vector& v);
linalg::Vector vector_from_json(const nlohmann::json& j);

}  // namespace ccomm::cli

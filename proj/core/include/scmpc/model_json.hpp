#pragma once

#include <string>

#include "scmpc/model.hpp"

namespace scmpc {

/// Reserved model name addressing example_plant().
inline constexpr const char* kExampleModelName = "paper-example";

/// Builds a model from a JSON document.
///
/// Matrices are row-major: either nested rows ([[1, 0], [0, 1]]) or a flat
/// array whose shape follows from the declared dimensions. Every
/// theta-dependent quantity is affine in theta:
///
///   {"nominal": <matrix>, "theta": [{"index": k, "coef": <matrix>}, ...]}
///
/// meaning nominal + sum_k theta_k * coef; a bare matrix is constant.
///
///   {
///     "name": "double-integrator",
///     "n": 2, "m": 1, "m_gamma": 2,
///     "theta": [{"dist": "uniform", "low": -0.1, "high": 0.1},
///               {"dist": "gaussian", "mean": 0, "stddev": 1}],
///     "gamma": [{"dist": "uniform", "low": -0.01, "high": 0.01}, ...],
///     "A": ..., "B": ..., "B_gamma": ...,
///     "state_constraints": {"G": <r x n>, "g": <affine r-vector>},
///     "input_constraints": {"G": <q x m>, "g": <affine q-vector>},
///     "K_f": <m x n>, "Q_f": <n x n>
///   }
///
/// Gamma components are drawn i.i.d. from their listed distributions.
/// Throws ConfigError on malformed documents.
UncertainModel model_from_json_text(const std::string& text);

/// Reads a model JSON file.
UncertainModel model_from_file(const std::string& path);

/// "paper-example" or a path to a model JSON file.
UncertainModel resolve_model(const std::string& name_or_path);

}  // namespace scmpc

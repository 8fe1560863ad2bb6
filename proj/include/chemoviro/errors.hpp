/*
 * Copyright (C) 2026 The chemoviro authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace chemoviro {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter set violates its positivity or bound invariants.
class InvalidParameters : public Error {
public:
    using Error::Error;
};

/// Non-finite or negative state component handed to a vector field.
class InvalidState : public Error {
public:
    using Error::Error;
};

/// Control value outside [0, MTD].
class BoundsError : public Error {
public:
    using Error::Error;
};

/// A required precondition (existence of an equilibrium, disease-free point, ...) does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Time integration produced a non-finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double last_valid_time)
        : Error(what), last_valid_time_(last_valid_time) {}

    [[nodiscard]] double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

/// Iterative solver did not reach its tolerance. Carries the best iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best_iterate, double residual)
        : Error(what), best_iterate_(std::move(best_iterate)), residual_(residual) {}

    [[nodiscard]] const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    std::vector<double> best_iterate_;
    double residual_;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace chemoviro

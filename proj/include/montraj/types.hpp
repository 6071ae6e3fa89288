// Copyright 2026 The montraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace montraj {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Invalid user input or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical invariant broke during simulation. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Requested combination of backend and model is not supported.
class UnsupportedError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

enum class Observable { Occupation, Current };

std::string_view to_string(Observable obs);
Observable observable_from_string(std::string_view name);

enum class InitialState { Neel };

/// Physical and protocol parameters of a monitored chain.
///
/// Sites are indexed 0..L-1 and bonds 0..L-2 (bond b joins sites b and b+1).
/// Energies are in units of the hopping amplitude.
struct ChainSpec {
    int L = 8;
    double U = 0.0;
    double gamma = 0.0;
    Observable observable = Observable::Occupation;
    double dt = 0.05;
    int n_steps = 100;
    InitialState initial_state = InitialState::Neel;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Number of measurement locations: sites for occupations, bonds for currents.
    int num_locations() const {
        return observable == Observable::Occupation ? L : L - 1;
    }

    double trigger_probability() const { return gamma * dt; }
};

}  // namespace montraj

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

// The oracle cross-check suite behind `montraj validate` and the acceptance
// binary. Each criterion runs at one of two scales: Quick for a smoke run in
// seconds to minutes, Full for the sizes and ensemble counts of the
// acceptance gate.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace montraj {

enum class ValidationScale { Quick, Full };

struct ValidationOptions {
    ValidationScale scale = ValidationScale::Quick;
    int workers = 1;
    /// Ensemble stores for the long criteria. Reruns resume from them.
    std::filesystem::path work_dir = "validation";
    std::ostream* log = nullptr;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
};

constexpr int kNumCriteria = 9;

CriterionResult run_criterion(int id, const ValidationOptions& options);

/// Runs the listed criteria (all when empty), in order.
std::vector<CriterionResult> run_validation(const ValidationOptions& options, std::span<const int> ids = {});

/// "criterion N: PASS  title | detail"
std::string format_result(const CriterionResult& result);

}  // namespace montraj

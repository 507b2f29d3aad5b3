/* Copyright 2026 The Interact Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line front end: gen, perturb, infer, train, eval, gradcheck, demo.

#ifndef INTERACT_TOOLS_CLI_H_
#define INTERACT_TOOLS_CLI_H_

#include <ostream>

namespace interact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

// Worst block error above which gradcheck fails.
inline constexpr double kGradCheckTolerance = 1e-4;

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace interact::cli

#endif  // INTERACT_TOOLS_CLI_H_

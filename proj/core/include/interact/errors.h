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

#ifndef INTERACT_ERRORS_H_
#define INTERACT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace interact {

// Shapes of operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration value is unusable (e.g. channels not divisible by heads).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation precondition that is not a shape problem.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input lies outside the domain of an operation (e.g. pooling an empty axis).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// NaN, infinity, or divergence encountered during evaluation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scene generation cannot satisfy the requested configuration.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs are well formed but inconsistent with each other (e.g. scene ids
// that do not line up between a scene file and a prediction file).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file or JSON document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file cannot be opened, written or renamed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace interact

#endif  // INTERACT_ERRORS_H_

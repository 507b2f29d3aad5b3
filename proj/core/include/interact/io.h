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

// JSON and JSON Lines encodings of scenes, predictions and configuration.
// Doubles are written in shortest round-trip form, so decode(encode(x))
// reproduces every value bit for bit. Decoding errors raise ParseError.

#ifndef INTERACT_IO_H_
#define INTERACT_IO_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "interact/scene.h"

namespace interact {

std::string SceneToJson(const Scene& scene);
Scene SceneFromJson(std::string_view text);
std::string PredictionSetToJson(const PredictionSet& preds);
PredictionSet PredictionSetFromJson(std::string_view text);

// Unknown keys are rejected; absent keys keep the value from `base`.
// A null "mu" decodes as an infinite distance threshold.
std::string ConfigToJson(const Config& config, int indent = 2);
Config ConfigFromJson(std::string_view text, const Config& base = Config{});

std::vector<Scene> ReadScenes(const std::string& path);
void WriteScenes(const std::string& path, std::span<const Scene> scenes);
std::vector<PredictionSet> ReadPredictions(const std::string& path);
void WritePredictions(const std::string& path, std::span<const PredictionSet> preds);

std::string ReadFile(const std::string& path);
// Writes to "<path>.tmp" and renames over `path`.
void WriteFileAtomic(const std::string& path, std::string_view content);

}  // namespace interact

#endif  // INTERACT_IO_H_

// Copyright 2026 The selftest-qrng Authors
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

#include <string>

#include <json.hpp>

#include "qrng/core_model.hpp"

namespace qrng {

/// Raised for malformed structured text: wrong types, missing or unknown
/// fields.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structured-text schemas. Field names match the domain types exactly and
// unknown fields are rejected. An infinite extinction_db is written as the
// string "inf".

nlohmann::json to_json(const DeviceParams& params);
DeviceParams device_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EnergyBounds& omega);
/// Accepts {omega0, omega1, p1[, omega_bar]} or {omega_bar, p1}. When all
/// three bounds are present they must agree with the averaging identity.
EnergyBounds energy_bounds_from_json(const nlohmann::json& j);

/// gamma is written as [[g(0,0), g(0,1)], [g(1,0), g(1,1)]], i.e. indexed
/// [b][x].
nlohmann::json to_json(const WitnessCertificate& cert);
/// Parses and validates.
WitnessCertificate certificate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CorrelationCounts& counts);
CorrelationCounts counts_from_json(const nlohmann::json& j);

/// Canonical text used for the RoundLog parameter digest.
std::string canonical_text(const DeviceParams& params);

nlohmann::json read_json_file(const std::string& path);

namespace detail {

/// Throws ParseError if `j` is not an object or carries a key outside
/// `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const char* what);
double get_number(const nlohmann::json& j, const char* key, const char* what);

}  // namespace detail

}  // namespace qrng

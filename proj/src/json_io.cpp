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

#include "qrng/json_io.hpp"

#include <cmath>
#include <fstream>

namespace qrng {

using nlohmann::json;

namespace detail {

void require_known_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ParseError(std::string(what) + ": unknown field '" + key + "'");
  }
}

double get_number(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string(what) + ": missing field '" + key + "'");
  if (!it->is_number()) throw ParseError(std::string(what) + ": field '" + key + "' must be a number");
  return it->get<double>();
}

}  // namespace detail

namespace {

using detail::get_number;
using detail::require_known_keys;

BitTable table_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array() || j[0].size() != 2 ||
      j[1].size() != 2) {
    throw ParseError(std::string(what) + ": expected a 2x2 array indexed [b][x]");
  }
  BitTable t;
  for (int b = 0; b < 2; ++b) {
    for (int x = 0; x < 2; ++x) {
      if (!j[b][x].is_number()) throw ParseError(std::string(what) + ": entries must be numbers");
      t(b, x) = j[b][x].get<double>();
    }
  }
  return t;
}

}  // namespace

json to_json(const DeviceParams& p) {
  json j;
  j["alpha_mag"] = p.alpha_mag();
  j["beta_mag"] = p.beta_mag();
  j["rel_phase"] = p.rel_phase();
  j["eta"] = p.eta();
  j["t2"] = p.t2();
  j["p1"] = p.p1();
  j["dark_prob"] = p.dark_prob();
  if (std::isinf(p.extinction_db())) {
    j["extinction_db"] = "inf";
  } else {
    j["extinction_db"] = p.extinction_db();
  }
  j["rep_rate_hz"] = p.rep_rate_hz();
  return j;
}

DeviceParams device_params_from_json(const json& j) {
  constexpr const char* what = "device";
  require_known_keys(j,
                     {"alpha_mag", "beta_mag", "rel_phase", "eta", "t2", "p1", "dark_prob", "extinction_db",
                      "rep_rate_hz"},
                     what);
  DeviceSettings s;
  s.alpha_mag = get_number(j, "alpha_mag", what);
  s.beta_mag = get_number(j, "beta_mag", what);
  s.eta = get_number(j, "eta", what);
  s.t2 = get_number(j, "t2", what);
  s.p1 = get_number(j, "p1", what);
  if (j.contains("rel_phase")) s.rel_phase = get_number(j, "rel_phase", what);
  if (j.contains("dark_prob")) s.dark_prob = get_number(j, "dark_prob", what);
  if (j.contains("rep_rate_hz")) s.rep_rate_hz = get_number(j, "rep_rate_hz", what);
  if (auto it = j.find("extinction_db"); it != j.end()) {
    if (it->is_string() && it->get<std::string>() == "inf") {
      s.extinction_db = kInfinity;
    } else if (it->is_number()) {
      s.extinction_db = it->get<double>();
    } else {
      throw ParseError("device: extinction_db must be a number or \"inf\"");
    }
  }
  return DeviceParams(s);
}

json to_json(const EnergyBounds& e) {
  return json{{"omega0", e.omega0()}, {"omega1", e.omega1()}, {"omega_bar", e.omega_bar()}, {"p1", e.p1()}};
}

EnergyBounds energy_bounds_from_json(const json& j) {
  constexpr const char* what = "energy";
  require_known_keys(j, {"omega0", "omega1", "omega_bar", "p1"}, what);
  const double p1 = get_number(j, "p1", what);
  const bool per_input = j.contains("omega0") || j.contains("omega1");
  if (!per_input) return EnergyBounds::from_average(get_number(j, "omega_bar", what), p1);

  auto e = EnergyBounds::from_per_input(get_number(j, "omega0", what), get_number(j, "omega1", what), p1);
  if (j.contains("omega_bar")) {
    const double declared = get_number(j, "omega_bar", what);
    if (std::abs(declared - e.omega_bar()) > 1e-12 * std::max(1.0, std::abs(declared))) {
      throw ValidationError({"omega_bar must equal (1-p1)*omega0 + p1*omega1"});
    }
  }
  return e;
}

json to_json(const WitnessCertificate& c) {
  return json{{"gamma", {{c.gamma(0, 0), c.gamma(0, 1)}, {c.gamma(1, 0), c.gamma(1, 1)}}},
              {"zeta", {c.zeta(0), c.zeta(1)}},
              {"c", c.c},
              {"d", c.d},
              {"h", c.h},
              {"epsilon", c.epsilon}};
}

WitnessCertificate certificate_from_json(const json& j) {
  constexpr const char* what = "certificate";
  require_known_keys(j, {"gamma", "zeta", "c", "d", "h", "epsilon"}, what);
  WitnessCertificate cert;
  if (!j.contains("gamma")) throw ParseError("certificate: missing field 'gamma'");
  cert.gamma = table_from_json(j["gamma"], "certificate.gamma");
  const auto it = j.find("zeta");
  if (it == j.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw ParseError("certificate: zeta must be an array of 2 numbers");
  }
  cert.zeta << (*it)[0].get<double>(), (*it)[1].get<double>();
  cert.c = get_number(j, "c", what);
  cert.d = get_number(j, "d", what);
  cert.h = get_number(j, "h", what);
  cert.epsilon = get_number(j, "epsilon", what);
  validate_certificate(cert);
  return cert;
}

json to_json(const CorrelationCounts& c) {
  return json{{"n", {{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}}}, {"n_total", c.total()}};
}

CorrelationCounts counts_from_json(const json& j) {
  require_known_keys(j, {"n", "n_total"}, "counts");
  const auto& n = j.at("n");
  if (!n.is_array() || n.size() != 2 || n[0].size() != 2 || n[1].size() != 2) {
    throw ParseError("counts: n must be a 2x2 array indexed [b][x]");
  }
  CountTable t;
  for (int b = 0; b < 2; ++b) {
    for (int x = 0; x < 2; ++x) {
      if (!n[b][x].is_number_unsigned()) throw ParseError("counts: entries must be nonnegative integers");
      t(b, x) = n[b][x].get<std::uint64_t>();
    }
  }
  CorrelationCounts counts(t);
  if (j.contains("n_total") && j["n_total"].get<std::uint64_t>() != counts.total()) {
    throw ValidationError({"n_total must equal the sum of n[b][x]"});
  }
  return counts;
}

std::string canonical_text(const DeviceParams& params) { return to_json(params).dump(); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace qrng

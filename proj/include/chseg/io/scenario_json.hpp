#pragma once

#include <json.hpp>

#include <fstream>
#include <string>

#include "chseg/sim.hpp"

namespace chseg::io {

/// Scenario specs are JSON; azimuths may be given in degrees (azimuth_deg)
/// or radians (azimuth).
inline ScenarioSpec read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario spec: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("scenario spec parse error: " + std::string(e.what()));
  }

  ScenarioSpec spec;
  spec.duration = j.at("duration").get<double>();
  spec.seed = j.value("seed", uint64_t{0});
  if (j.contains("noise_snr_db")) spec.noise_snr_db = j["noise_snr_db"].get<double>();

  const auto& g = j.value("geometry", nlohmann::json::object());
  spec.geometry = uniform_circular_array(g.value("mic_count", 8), g.value("radius", 0.1),
                                         g.value("speed_of_sound", 343.0));

  for (const auto& s : j.value("sources", nlohmann::json::array())) {
    SourceSpec src;
    src.source_id = s.value("id", "src" + std::to_string(spec.sources.size()));
    if (s.contains("azimuth_deg"))
      src.azimuth = wrap_positive(s["azimuth_deg"].get<double>() * kPi / 180.0);
    else
      src.azimuth = wrap_positive(s.value("azimuth", 0.0));
    const std::string kind = s.value("kind", "white_noise");
    if (kind == "white_noise") src.kind = SignalKind::white_noise;
    else if (kind == "tone") src.kind = SignalKind::tone;
    else if (kind == "speech_like") src.kind = SignalKind::speech_like;
    else throw DataError("scenario spec: unknown signal kind " + kind);
    src.tone_hz = s.value("tone_hz", 1000.0);
    src.level_db = s.value("level_db", 0.0);
    for (const auto& iv : s.value("intervals", nlohmann::json::array()))
      src.active_intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
    spec.sources.push_back(std::move(src));
  }
  spec.validate();
  return spec;
}

}  // namespace chseg::io

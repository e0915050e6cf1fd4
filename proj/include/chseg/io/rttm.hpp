#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "chseg/annotations.hpp"

namespace chseg::io {

/// Parses RTTM SPEAKER lines:
///   SPEAKER <rec> 1 <tbeg> <tdur> <NA> <NA> <spk> <NA> <NA>
/// Errors carry the offending line number. `duration` is taken from the
/// furthest segment end unless a larger value is supplied.
inline AnnotationSet read_rttm(const std::string& path, double duration = 0.0) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open RTTM file: " + path);
  AnnotationSet ann;
  ann.duration = duration;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string type, rec, chan, tbeg, tdur, f6, f7, spk;
    if (!(ls >> type >> rec >> chan >> tbeg >> tdur >> f6 >> f7 >> spk))
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed RTTM line");
    if (type != "SPEAKER") continue;
    double start = 0.0, dur = 0.0;
    try {
      start = std::stod(tbeg);
      dur = std::stod(tdur);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric time field");
    }
    if (start < 0.0 || dur <= 0.0)
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid segment times");
    ann.entries.push_back({spk, start, start + dur});
    ann.duration = std::max(ann.duration, start + dur);
    if (ann.recording_id.empty()) ann.recording_id = rec;
  }
  ann.sort_by_start();
  return ann;
}

inline void write_rttm(const std::string& path, const AnnotationSet& ann) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write RTTM file: " + path);
  const std::string rec = ann.recording_id.empty() ? "rec" : ann.recording_id;
  char buf[256];
  for (const auto& e : ann.entries) {
    std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                  rec.c_str(), e.start, e.end - e.start, e.speaker_id.c_str());
    out << buf;
  }
}

}  // namespace chseg::io

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "chseg/common.hpp"

namespace chseg {

struct SpeakerSegment {
  std::string speaker_id;
  double start = 0.0;  // seconds
  double end = 0.0;    // seconds, exclusive
};

/// Speaker-attributed time segments for one recording. Overlaps across
/// different speakers are allowed; segments of one speaker must not overlap.
struct AnnotationSet {
  std::vector<SpeakerSegment> entries;
  std::string recording_id;
  double duration = 0.0;

  void sort_by_start() {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SpeakerSegment& a, const SpeakerSegment& b) {
                       return a.start < b.start;
                     });
  }

  void validate() const {
    for (const auto& e : entries) {
      if (!(e.start >= 0.0 && e.start < e.end && e.end <= duration + 1e-9))
        throw DataError("annotation segment outside [0, duration): " + e.speaker_id);
    }
  }
};

}  // namespace chseg

#pragma once

// Multichannel speech-segmentation toolkit: circular-harmonics DOA spatial
// features, acoustic features, a temporal convolutional sequence labeler for
// VAD/OSD/SCD, segmentation metrics, and a circular-array scene simulator.

#include "chseg/acoustic.hpp"
#include "chseg/annotations.hpp"
#include "chseg/bessel.hpp"
#include "chseg/common.hpp"
#include "chseg/eval.hpp"
#include "chseg/features.hpp"
#include "chseg/geometry.hpp"
#include "chseg/labeling.hpp"
#include "chseg/recipe.hpp"
#include "chseg/sim.hpp"
#include "chseg/spatial.hpp"
#include "chseg/stft.hpp"
#include "chseg/tcn.hpp"
#include "chseg/trainer.hpp"
#include "chseg/waveform.hpp"

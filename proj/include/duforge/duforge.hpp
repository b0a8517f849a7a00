#pragma once

// Umbrella include for the whole engine.

#include "duforge/bounds.hpp"
#include "duforge/color.hpp"
#include "duforge/cues.hpp"
#include "duforge/dataset.hpp"
#include "duforge/degrade.hpp"
#include "duforge/estimate.hpp"
#include "duforge/fft.hpp"
#include "duforge/image.hpp"
#include "duforge/kernel.hpp"
#include "duforge/metrics.hpp"
#include "duforge/png_io.hpp"
#include "duforge/process_restorer.hpp"
#include "duforge/resize.hpp"
#include "duforge/restore.hpp"
#include "duforge/reward.hpp"
#include "duforge/reward_server.hpp"
#include "duforge/rng.hpp"
#include "duforge/sensitivity.hpp"
#include "duforge/spec_io.hpp"
#include "duforge/taxonomy.hpp"
#include "duforge/tokenizer.hpp"

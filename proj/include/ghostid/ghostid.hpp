// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.
#pragma once

#include "ghostid/array.hpp"
#include "ghostid/common.hpp"
#include "ghostid/estimate_common.hpp"
#include "ghostid/estimate_h0.hpp"
#include "ghostid/estimate_h1.hpp"
#include "ghostid/experiments.hpp"
#include "ghostid/glrt.hpp"
#include "ghostid/io.hpp"
#include "ghostid/metrics.hpp"
#include "ghostid/rng.hpp"
#include "ghostid/scene.hpp"
#include "ghostid/theory.hpp"

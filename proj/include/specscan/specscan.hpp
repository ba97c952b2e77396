// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specscan/errors.hpp"
#include "specscan/seeding.hpp"
#include "specscan/iq_model.hpp"
#include "specscan/signal_synth.hpp"
#include "specscan/detectors.hpp"
#include "specscan/scan_engine.hpp"
#include "specscan/occupancy_report.hpp"
#include "specscan/eval_harness.hpp"

#pragma once

// Umbrella header for the whole library.

#include "core.hpp"
#include "trace.hpp"
#include "dsp.hpp"
#include "simulator.hpp"
#include "features.hpp"
#include "svm.hpp"
#include "classifier.hpp"
#include "identifier.hpp"
#include "scheduler.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"

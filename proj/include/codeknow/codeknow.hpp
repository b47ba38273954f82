#pragma once

// Umbrella header.

#include "codeknow/analysis.hpp"
#include "codeknow/config.hpp"
#include "codeknow/doe.hpp"
#include "codeknow/errors.hpp"
#include "codeknow/gitminer.hpp"
#include "codeknow/identity.hpp"
#include "codeknow/pipeline.hpp"
#include "codeknow/report.hpp"
#include "codeknow/truckfactor.hpp"

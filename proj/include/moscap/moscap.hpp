#pragma once

// MOS capacitor C-V modeling, virtual measurement and parameter extraction.

#include "moscap/constants.hpp"
#include "moscap/errors.hpp"
#include "moscap/types.hpp"
#include "moscap/model.hpp"
#include "moscap/sweep.hpp"
#include "moscap/extraction.hpp"
#include "moscap/fit.hpp"
#include "moscap/reference.hpp"
#include "moscap/io.hpp"
#include "moscap/svg.hpp"

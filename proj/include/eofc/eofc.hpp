#pragma once

#include "eofc/error.hpp"
#include "eofc/random.hpp"
#include "eofc/model.hpp"
#include "eofc/modem.hpp"
#include "eofc/optimizer.hpp"
#include "eofc/pilots.hpp"
#include "eofc/tracker.hpp"
#include "eofc/harness.hpp"
#include "eofc/config.hpp"

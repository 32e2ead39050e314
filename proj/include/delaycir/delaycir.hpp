#pragma once

#include "delaycir/config.hpp"
#include "delaycir/measure.hpp"
#include "delaycir/model.hpp"
#include "delaycir/monte_carlo.hpp"
#include "delaycir/pricing.hpp"
#include "delaycir/riccati.hpp"
#include "delaycir/simulate.hpp"
#include "delaycir/toml.hpp"

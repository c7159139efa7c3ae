#pragma once

// Umbrella header: finite-size key rates for the improved two-way
// continuous-variable QKD protocol and its one-way baseline.

#include "cvqkd/errors.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/protocols.hpp"
#include "cvqkd/sweep.hpp"
#include "cvqkd/temporal.hpp"

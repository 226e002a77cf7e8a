#pragma once

// Certified numerical analysis of countable-state Markov chains: simulation,
// truncation-based transient laws and exit statistics with computable error
// bounds, stationary distributions, structural classification, and
// Foster-Lyapunov certificate checking.

#include "chainkit/distribution.hpp"
#include "chainkit/errors.hpp"
#include "chainkit/exit.hpp"
#include "chainkit/lyapunov.hpp"
#include "chainkit/model.hpp"
#include "chainkit/rng.hpp"
#include "chainkit/simulate.hpp"
#include "chainkit/state.hpp"
#include "chainkit/stationary.hpp"
#include "chainkit/structure.hpp"
#include "chainkit/transient.hpp"
#include "chainkit/truncation.hpp"

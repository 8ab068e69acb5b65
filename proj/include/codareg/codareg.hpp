#pragma once

// Umbrella header.

#include "codareg/bayes_fit.hpp"
#include "codareg/check.hpp"
#include "codareg/composition.hpp"
#include "codareg/config.hpp"
#include "codareg/csv.hpp"
#include "codareg/dataset.hpp"
#include "codareg/design.hpp"
#include "codareg/errors.hpp"
#include "codareg/freq_fit.hpp"
#include "codareg/interpret.hpp"
#include "codareg/optim.hpp"
#include "codareg/oracle.hpp"
#include "codareg/rng.hpp"
#include "codareg/run.hpp"
#include "codareg/synth.hpp"
#include "codareg/version.hpp"
#include "codareg/zinb.hpp"

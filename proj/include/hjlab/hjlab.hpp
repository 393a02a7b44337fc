#pragma once

#include "hjlab/error.hpp"
#include "hjlab/time_coefficient.hpp"
#include "hjlab/model.hpp"
#include "hjlab/synth.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/verify.hpp"
#include "hjlab/evolve.hpp"
#include "hjlab/serialize.hpp"
#include "hjlab/runner.hpp"

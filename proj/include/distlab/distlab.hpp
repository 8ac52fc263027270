#pragma once

// Umbrella header for the whole library.

#include "distlab/adam.hpp"
#include "distlab/bootstrap.hpp"
#include "distlab/data.hpp"
#include "distlab/distill.hpp"
#include "distlab/errors.hpp"
#include "distlab/experiments.hpp"
#include "distlab/gradcheck.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"
#include "distlab/models.hpp"
#include "distlab/oracles.hpp"
#include "distlab/parallel.hpp"
#include "distlab/report.hpp"
#include "distlab/rng.hpp"
#include "distlab/sequence.hpp"
#include "distlab/serialize.hpp"
#include "distlab/uncertainty.hpp"

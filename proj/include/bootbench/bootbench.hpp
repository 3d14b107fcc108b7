#pragma once

// Umbrella header for the bootstrap-bench library.

#include "bootbench/config.hpp"
#include "bootbench/datagen.hpp"
#include "bootbench/dyn_model.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/eval_ns.hpp"
#include "bootbench/harness.hpp"
#include "bootbench/io.hpp"
#include "bootbench/metrics.hpp"
#include "bootbench/nn.hpp"
#include "bootbench/nn_batch.hpp"
#include "bootbench/parallel.hpp"
#include "bootbench/rng.hpp"
#include "bootbench/text.hpp"

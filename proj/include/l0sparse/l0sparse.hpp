#pragma once

#include "l0sparse/checkpoint.hpp"
#include "l0sparse/dataset_io.hpp"
#include "l0sparse/features.hpp"
#include "l0sparse/gates.hpp"
#include "l0sparse/gradcheck.hpp"
#include "l0sparse/layers.hpp"
#include "l0sparse/matrix.hpp"
#include "l0sparse/models.hpp"
#include "l0sparse/pendulum.hpp"
#include "l0sparse/replay_buffer.hpp"
#include "l0sparse/rng.hpp"
#include "l0sparse/training.hpp"

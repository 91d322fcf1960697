#pragma once

#include "advhash/analysis.hpp"
#include "advhash/architecture.hpp"
#include "advhash/attack.hpp"
#include "advhash/checkpoint.hpp"
#include "advhash/dataset.hpp"
#include "advhash/defense.hpp"
#include "advhash/error.hpp"
#include "advhash/gradcheck.hpp"
#include "advhash/hashing.hpp"
#include "advhash/io.hpp"
#include "advhash/kernels.hpp"
#include "advhash/network.hpp"
#include "advhash/rng.hpp"
#include "advhash/tensor.hpp"
#include "advhash/training.hpp"

#ifndef VOF_EXPERIMENTS_HPP
#define VOF_EXPERIMENTS_HPP

#include "vof/experiments/config.hpp"
#include "vof/experiments/dataset.hpp"
#include "vof/experiments/results.hpp"
#include "vof/experiments/runners.hpp"

#endif

#pragma once

#include "dynlab/training/gd.hpp"
#include "dynlab/training/model.hpp"
#include "dynlab/training/stability.hpp"
#include "dynlab/training/stochastic.hpp"
#include "dynlab/training/variational.hpp"

#pragma once

#include "dynlab/networks/activation.hpp"
#include "dynlab/networks/classify.hpp"
#include "dynlab/networks/memory.hpp"
#include "dynlab/networks/mlp.hpp"
#include "dynlab/networks/neural_ode.hpp"
#include "dynlab/networks/serialize.hpp"
#include "dynlab/networks/vector_fields.hpp"

#pragma once

#include "dynlab/discrete_ips/spin.hpp"

#pragma once

#include "dynlab/meanfield/graph.hpp"
#include "dynlab/meanfield/ips.hpp"
#include "dynlab/meanfield/vlasov.hpp"

#pragma once

#include "dynlab/morse/critical.hpp"
#include "dynlab/morse/verify.hpp"

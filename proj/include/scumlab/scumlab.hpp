#pragma once

#include "concentration.hpp"
#include "coupling.hpp"
#include "csv.hpp"
#include "distance.hpp"
#include "enumeration.hpp"
#include "errors.hpp"
#include "families.hpp"
#include "harness/config.hpp"
#include "harness/runner.hpp"
#include "kernel.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "regularity.hpp"
#include "renewal.hpp"
#include "sequence.hpp"

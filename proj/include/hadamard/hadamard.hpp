#pragma once

#include "hadamard/errors.hpp"
#include "hadamard/geometry.hpp"
#include "hadamard/sampling.hpp"
#include "hadamard/schedule.hpp"
#include "hadamard/operators.hpp"
#include "hadamard/resolvents.hpp"
#include "hadamard/fixtures.hpp"
#include "hadamard/schemes.hpp"
#include "hadamard/diagnostics.hpp"

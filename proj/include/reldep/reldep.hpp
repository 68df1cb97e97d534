#pragma once

#include "reldep/datagen.hpp"
#include "reldep/errors.hpp"
#include "reldep/harness.hpp"
#include "reldep/kernels.hpp"
#include "reldep/sample.hpp"
#include "reldep/testing.hpp"
#include "reldep/ustat.hpp"

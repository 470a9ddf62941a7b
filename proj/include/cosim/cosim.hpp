#pragma once

#include "cosim/combine.hpp"
#include "cosim/config_syntax.hpp"
#include "cosim/corpus.hpp"
#include "cosim/embedstore.hpp"
#include "cosim/harness.hpp"
#include "cosim/metrics.hpp"
#include "cosim/similarity.hpp"
#include "cosim/version.hpp"

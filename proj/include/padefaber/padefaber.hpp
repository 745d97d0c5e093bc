#pragma once

#include "padefaber/analysis.hpp"
#include "padefaber/complex_polynomial.hpp"
#include "padefaber/experiment.hpp"
#include "padefaber/faber.hpp"
#include "padefaber/geometry.hpp"
#include "padefaber/simpade.hpp"

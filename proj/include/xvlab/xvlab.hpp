#pragma once

#include "xvlab/anonymizer.hpp"
#include "xvlab/attack.hpp"
#include "xvlab/embedding.hpp"
#include "xvlab/experiment.hpp"
#include "xvlab/io.hpp"
#include "xvlab/metrics.hpp"
#include "xvlab/rng.hpp"
#include "xvlab/world.hpp"

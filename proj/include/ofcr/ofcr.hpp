#pragma once

// Everything, for tools and quick experiments.

#include "ofcr/conformal.hpp"
#include "ofcr/interval.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/io.hpp"
#include "ofcr/metrics.hpp"
#include "ofcr/normal.hpp"
#include "ofcr/posthoc.hpp"
#include "ofcr/protocol.hpp"
#include "ofcr/rng.hpp"
#include "ofcr/scheduler.hpp"
#include "ofcr/selection.hpp"
#include "ofcr/simulation.hpp"

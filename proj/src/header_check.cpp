// Compiles every public header once so a missing include fails the build
// even if no test happens to pull that header in first.
#include "ofcr/normal.hpp"
#include "ofcr/interval.hpp"
#include "ofcr/metrics.hpp"
#include "ofcr/scheduler.hpp"
#include "ofcr/interval_rules.hpp"
#include "ofcr/selection.hpp"
#include "ofcr/protocol.hpp"
#include "ofcr/posthoc.hpp"
#include "ofcr/rng.hpp"
#include "ofcr/simulation.hpp"
#include "ofcr/conformal.hpp"
#include "ofcr/io.hpp"
#include "ofcr/ofcr.hpp"

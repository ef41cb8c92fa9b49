#pragma once

#include "pact/core.hpp"
#include "pact/container.hpp"
#include "pact/fft.hpp"
#include "pact/parallel.hpp"
#include "pact/phantom.hpp"
#include "pact/forward.hpp"
#include "pact/recon.hpp"
#include "pact/baseline.hpp"
#include "pact/metrics.hpp"

#pragma once

#include "fedsim/arch.hpp"
#include "fedsim/catalog.hpp"
#include "fedsim/cli.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/frame.hpp"
#include "fedsim/layers.hpp"
#include "fedsim/loss.hpp"
#include "fedsim/meter.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"
#include "fedsim/optim.hpp"
#include "fedsim/params.hpp"
#include "fedsim/report.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tcp.hpp"
#include "fedsim/tensor.hpp"
#include "fedsim/transport.hpp"

// Convenience umbrella header.
#pragma once

#include "levyflow/config.hpp"
#include "levyflow/coupling.hpp"
#include "levyflow/dataset_io.hpp"
#include "levyflow/digest.hpp"
#include "levyflow/dual.hpp"
#include "levyflow/errors.hpp"
#include "levyflow/expr.hpp"
#include "levyflow/extract.hpp"
#include "levyflow/flow.hpp"
#include "levyflow/io.hpp"
#include "levyflow/net.hpp"
#include "levyflow/pipeline.hpp"
#include "levyflow/quadrature.hpp"
#include "levyflow/report.hpp"
#include "levyflow/rng.hpp"
#include "levyflow/sde.hpp"
#include "levyflow/spline.hpp"
#include "levyflow/stable.hpp"
#include "levyflow/svg.hpp"
#include "levyflow/train.hpp"

#pragma once

#include "mlm/criteria.hpp"
#include "mlm/data.hpp"
#include "mlm/dataset.hpp"
#include "mlm/design.hpp"
#include "mlm/error.hpp"
#include "mlm/fit.hpp"
#include "mlm/inference.hpp"
#include "mlm/likelihood.hpp"
#include "mlm/links.hpp"
#include "mlm/prob.hpp"
#include "mlm/rng.hpp"
#include "mlm/select.hpp"
#include "mlm/special.hpp"
#include "mlm/structure.hpp"

#ifndef FAIRKIT_FAIRKIT_HPP
#define FAIRKIT_FAIRKIT_HPP

#include "fairkit/ci.hpp"
#include "fairkit/dag.hpp"
#include "fairkit/dataset.hpp"
#include "fairkit/detect.hpp"
#include "fairkit/distribution.hpp"
#include "fairkit/error.hpp"
#include "fairkit/fairness.hpp"
#include "fairkit/intervention.hpp"
#include "fairkit/repair.hpp"
#include "fairkit/variable.hpp"

#endif

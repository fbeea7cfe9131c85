#pragma once

// Everything at once.
#include "carnot/errors.hpp"
#include "carnot/linalg.hpp"
#include "carnot/algebra.hpp"
#include "carnot/group_spec.hpp"
#include "carnot/group.hpp"
#include "carnot/qmc.hpp"
#include "carnot/optimize.hpp"
#include "carnot/distance.hpp"
#include "carnot/subgroups.hpp"
#include "carnot/haar.hpp"
#include "carnot/graphs.hpp"
#include "carnot/measures.hpp"
#include "carnot/heisenberg.hpp"

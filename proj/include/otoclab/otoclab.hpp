#pragma once

#include "otoclab/analytic.hpp"
#include "otoclab/brickwall.hpp"
#include "otoclab/butterfly.hpp"
#include "otoclab/config.hpp"
#include "otoclab/io.hpp"
#include "otoclab/linalg.hpp"
#include "otoclab/model.hpp"
#include "otoclab/rtr.hpp"
#include "otoclab/sim.hpp"
#include "otoclab/trotter.hpp"
#include "otoclab/util.hpp"
#include "otoclab/yky.hpp"

#pragma once

#include "pbcs/error.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/linalg.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"
#include "pbcs/control.hpp"
#include "pbcs/transition.hpp"
#include "pbcs/first_order.hpp"
#include "pbcs/high_order.hpp"
#include "pbcs/search.hpp"

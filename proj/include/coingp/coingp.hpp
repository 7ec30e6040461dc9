#pragma once

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/evaluation.hpp"
#include "coingp/evolution.hpp"
#include "coingp/fitness.hpp"
#include "coingp/imagery.hpp"
#include "coingp/model.hpp"
#include "coingp/neighborhood.hpp"
#include "coingp/operators.hpp"
#include "coingp/random.hpp"
#include "coingp/tree.hpp"

#pragma once

#include "chui/bounds.hpp"
#include "chui/config.hpp"
#include "chui/error.hpp"
#include "chui/experiments.hpp"
#include "chui/field.hpp"
#include "chui/optimizer.hpp"
#include "chui/quadrature.hpp"
#include "chui/version.hpp"

#pragma once

#include "cavity_dw/errors.hpp"
#include "cavity_dw/units.hpp"
#include "cavity_dw/grid.hpp"
#include "cavity_dw/cavity_field.hpp"
#include "cavity_dw/gpe.hpp"
#include "cavity_dw/variational.hpp"
#include "cavity_dw/two_mode.hpp"

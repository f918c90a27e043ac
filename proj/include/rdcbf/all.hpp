#pragma once

#include "rdcbf/errors.hpp"
#include "rdcbf/numeric.hpp"
#include "rdcbf/model.hpp"
#include "rdcbf/evading.hpp"
#include "rdcbf/zcbf.hpp"
#include "rdcbf/box_qp.hpp"
#include "rdcbf/filter.hpp"
#include "rdcbf/uav.hpp"

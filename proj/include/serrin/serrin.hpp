#pragma once

#include "serrin/error.hpp"
#include "serrin/model.hpp"
#include "serrin/domain.hpp"
#include "serrin/solver.hpp"
#include "serrin/verify.hpp"

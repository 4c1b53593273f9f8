#pragma once

#include "core.hpp"
#include "errors.hpp"
#include "qbessel.hpp"
#include "qexp.hpp"
#include "verify.hpp"

#pragma once

#include "wban/app.hpp"
#include "wban/diversity.hpp"
#include "wban/error.hpp"
#include "wban/metrics.hpp"
#include "wban/nodes.hpp"
#include "wban/synthgen.hpp"
#include "wban/trace.hpp"

#pragma once

// Umbrella header.

#include "provlq/catalog.hpp"
#include "provlq/error.hpp"
#include "provlq/eval.hpp"
#include "provlq/expr.hpp"
#include "provlq/lineage.hpp"
#include "provlq/oracle.hpp"
#include "provlq/pretty.hpp"
#include "provlq/sqlgen.hpp"
#include "provlq/surface.hpp"
#include "provlq/typecheck.hpp"
#include "provlq/types.hpp"
#include "provlq/value.hpp"
#include "provlq/whereprov.hpp"

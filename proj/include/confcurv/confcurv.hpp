#pragma once

// Convenience umbrella: the whole library in one include.

#include <confcurv/calculus.hpp>
#include <confcurv/catalog.hpp>
#include <confcurv/conformal.hpp>
#include <confcurv/equivalence.hpp>
#include <confcurv/expr.hpp>
#include <confcurv/fd.hpp>
#include <confcurv/geometry.hpp>
#include <confcurv/metric.hpp>
#include <confcurv/parse.hpp>
#include <confcurv/rational.hpp>
#include <confcurv/report.hpp>
#include <confcurv/simplify.hpp>
#include <confcurv/tensor.hpp>

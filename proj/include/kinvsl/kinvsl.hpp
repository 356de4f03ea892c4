#pragma once

// Umbrella header: the whole library.

#include "kinvsl/bkvglab.hpp"
#include "kinvsl/cli.hpp"
#include "kinvsl/core.hpp"
#include "kinvsl/expr.hpp"
#include "kinvsl/exprfn.hpp"
#include "kinvsl/extensions.hpp"
#include "kinvsl/gallery.hpp"
#include "kinvsl/gridfn.hpp"
#include "kinvsl/ktransform.hpp"
#include "kinvsl/lgtransform.hpp"
#include "kinvsl/ode.hpp"
#include "kinvsl/parallel.hpp"
#include "kinvsl/problem.hpp"
#include "kinvsl/quadrature.hpp"
#include "kinvsl/report.hpp"
#include "kinvsl/rootfind.hpp"
#include "kinvsl/schroeder.hpp"
#include "kinvsl/slcore.hpp"
#include "kinvsl/spec_io.hpp"
#include "kinvsl/spectral.hpp"

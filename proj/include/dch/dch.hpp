// Umbrella header.
#pragma once

#include "dch/assembly.hpp"
#include "dch/field.hpp"
#include "dch/integrate.hpp"
#include "dch/io.hpp"
#include "dch/snapshot.hpp"
#include "dch/mesh.hpp"
#include "dch/mms.hpp"
#include "dch/multigrid.hpp"
#include "dch/quadrature.hpp"
#include "dch/sparse.hpp"
#include "dch/study.hpp"
#include "dch/system.hpp"

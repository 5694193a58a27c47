#pragma once

// Polygon boundary fitting from box annotations: geometry, energy terms with
// analytic gradients, the window resampling frame, the descent loop, and the
// file plumbing used by the command-line tool.

#include "polysnake/clip.hpp"
#include "polysnake/energy.hpp"
#include "polysnake/geometry.hpp"
#include "polysnake/gradcheck.hpp"
#include "polysnake/image.hpp"
#include "polysnake/io.hpp"
#include "polysnake/pipeline.hpp"
#include "polysnake/raster.hpp"
#include "polysnake/snake.hpp"

#pragma once

#include "bluth/annealing.hpp"
#include "bluth/descent.hpp"
#include "bluth/errors.hpp"
#include "bluth/eval.hpp"
#include "bluth/hierarchy.hpp"
#include "bluth/max_margin.hpp"
#include "bluth/objective.hpp"
#include "bluth/scene.hpp"
#include "bluth/spectra_update.hpp"
#include "bluth/training.hpp"

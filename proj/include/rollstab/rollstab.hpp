#pragma once

#include "rollstab/climatology.hpp"
#include "rollstab/detectors.hpp"
#include "rollstab/error.hpp"
#include "rollstab/extremes.hpp"
#include "rollstab/grid.hpp"
#include "rollstab/manifest.hpp"
#include "rollstab/memorize.hpp"
#include "rollstab/perturb.hpp"
#include "rollstab/report.hpp"
#include "rollstab/rgf.hpp"
#include "rollstab/rollout.hpp"
#include "rollstab/spectra.hpp"
#include "rollstab/stats.hpp"
#include "rollstab/synth.hpp"

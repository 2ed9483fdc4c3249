#pragma once

#include "offpsf/config.hpp"
#include "offpsf/errors.hpp"
#include "offpsf/experiment.hpp"
#include "offpsf/fixtures.hpp"
#include "offpsf/format.hpp"
#include "offpsf/mdp.hpp"
#include "offpsf/mdp_io.hpp"
#include "offpsf/off_policy_eval.hpp"
#include "offpsf/optimizer.hpp"
#include "offpsf/rng.hpp"
#include "offpsf/run_csv.hpp"
#include "offpsf/sf_grad.hpp"
#include "offpsf/stats.hpp"
#include "offpsf/verify.hpp"

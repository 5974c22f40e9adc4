#pragma once

#include <hybridem/brownian.hpp>
#include <hybridem/commands.hpp>
#include <hybridem/config.hpp>
#include <hybridem/csv.hpp>
#include <hybridem/ctmc.hpp>
#include <hybridem/error.hpp>
#include <hybridem/harness.hpp>
#include <hybridem/model.hpp>
#include <hybridem/random.hpp>
#include <hybridem/solvers.hpp>

#pragma once

#include "colsynth/beetle.hpp"
#include "colsynth/cli.hpp"
#include "colsynth/colored_mdp.hpp"
#include "colsynth/dt.hpp"
#include "colsynth/enumerate.hpp"
#include "colsynth/error.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/formula.hpp"
#include "colsynth/graph.hpp"
#include "colsynth/mdp.hpp"
#include "colsynth/oracle.hpp"
#include "colsynth/parameters.hpp"
#include "colsynth/pomdp.hpp"
#include "colsynth/problem_file.hpp"
#include "colsynth/robust.hpp"
#include "colsynth/theory.hpp"
#include "colsynth/value.hpp"

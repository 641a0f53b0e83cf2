#pragma once

#include "msm/ast.hpp"
#include "msm/det_equiv.hpp"
#include "msm/errors.hpp"
#include "msm/lexer.hpp"
#include "msm/lp.hpp"
#include "msm/meta_model.hpp"
#include "msm/oracles.hpp"
#include "msm/parser.hpp"
#include "msm/report.hpp"
#include "msm/scenario_tree.hpp"

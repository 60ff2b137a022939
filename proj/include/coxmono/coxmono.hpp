#pragma once

#include "coxmono/bootstrap.hpp"
#include "coxmono/concave_majorant.hpp"
#include "coxmono/cox_fit.hpp"
#include "coxmono/errors.hpp"
#include "coxmono/gof_tests.hpp"
#include "coxmono/limit_theory.hpp"
#include "coxmono/nonparam.hpp"
#include "coxmono/parallel.hpp"
#include "coxmono/random.hpp"
#include "coxmono/scenario.hpp"
#include "coxmono/sim_harness.hpp"
#include "coxmono/survival_data.hpp"
#include "coxmono/weibull_cox.hpp"

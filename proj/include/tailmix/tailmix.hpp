#pragma once

#include "tailmix/branching.hpp"
#include "tailmix/closed_form.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/io.hpp"
#include "tailmix/mc_oracle.hpp"
#include "tailmix/mixture_stats.hpp"
#include "tailmix/schedule_grammar.hpp"
#include "tailmix/specfn.hpp"

#pragma once

#include "hpcadvisor/advisor.hpp"
#include "hpcadvisor/dataset.hpp"
#include "hpcadvisor/error.hpp"
#include "hpcadvisor/executor.hpp"
#include "hpcadvisor/optimizer.hpp"
#include "hpcadvisor/planner.hpp"
#include "hpcadvisor/predictor.hpp"
#include "hpcadvisor/report.hpp"

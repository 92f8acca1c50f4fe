#pragma once

#include "semstr/types.hpp"
#include "semstr/formula.hpp"
#include "semstr/order.hpp"
#include "semstr/circuit.hpp"
#include "semstr/compile.hpp"
#include "semstr/mi.hpp"
#include "semstr/oracle.hpp"
#include "semstr/strengthen.hpp"
#include "semstr/loss.hpp"
#include "semstr/tasks.hpp"
#include "semstr/train.hpp"
#include "semstr/io.hpp"
#include "semstr/experiment.hpp"

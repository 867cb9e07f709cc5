#pragma once

#include "rdgoodput/units.hpp"
#include "rdgoodput/frames.hpp"
#include "rdgoodput/analytic.hpp"
#include "rdgoodput/channel.hpp"
#include "rdgoodput/arq.hpp"
#include "rdgoodput/event_queue.hpp"
#include "rdgoodput/markov.hpp"
#include "rdgoodput/simulator.hpp"
#include "rdgoodput/experiment.hpp"

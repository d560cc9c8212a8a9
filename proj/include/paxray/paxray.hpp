#pragma once

#include "paxray/error.hpp"
#include "paxray/parallel.hpp"
#include "paxray/grid.hpp"
#include "paxray/container.hpp"
#include "paxray/taxonomy.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/morph.hpp"
#include "paxray/derive.hpp"
#include "paxray/project.hpp"
#include "paxray/language.hpp"
#include "paxray/ground.hpp"
#include "paxray/eval.hpp"
#include "paxray/phantom.hpp"
#include "paxray/pipeline.hpp"

#pragma once

#include "otiea/autodiff.hpp"
#include "otiea/checkpoint.hpp"
#include "otiea/config.hpp"
#include "otiea/entity_decoder.hpp"
#include "otiea/evaluator.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/model.hpp"
#include "otiea/neighbors.hpp"
#include "otiea/ontology_fusion.hpp"
#include "otiea/parameters.hpp"
#include "otiea/pipeline.hpp"
#include "otiea/synth.hpp"
#include "otiea/topology_encoder.hpp"
#include "otiea/trainer.hpp"
#include "otiea/triple_correlation.hpp"

#pragma once

// Umbrella header for the whole library.

#include "microeval/canonical_json.hpp"
#include "microeval/data.hpp"
#include "microeval/digest.hpp"
#include "microeval/errors.hpp"
#include "microeval/gateway.hpp"
#include "microeval/http_backend.hpp"
#include "microeval/knowledge_eval.hpp"
#include "microeval/oracle_eval.hpp"
#include "microeval/prompts.hpp"
#include "microeval/report.hpp"
#include "microeval/runs.hpp"
#include "microeval/setting.hpp"
#include "microeval/simulator.hpp"
#include "microeval/strings.hpp"

#pragma once

#include "signaffect/au_mapping.hpp"
#include "signaffect/cooccurrence.hpp"
#include "signaffect/corpus.hpp"
#include "signaffect/crossval.hpp"
#include "signaffect/dataset.hpp"
#include "signaffect/feature_id.hpp"
#include "signaffect/fer_sidecar.hpp"
#include "signaffect/forest.hpp"
#include "signaffect/lexicon.hpp"
#include "signaffect/metrics.hpp"
#include "signaffect/model_io.hpp"
#include "signaffect/rng.hpp"

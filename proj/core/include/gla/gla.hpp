#pragma once

#include "gla/chunkwise.hpp"
#include "gla/config.hpp"
#include "gla/fixtures.hpp"
#include "gla/gates.hpp"
#include "gla/instance.hpp"
#include "gla/parallel.hpp"
#include "gla/parallel_form.hpp"
#include "gla/recurrent.hpp"
#include "gla/tensor.hpp"
#include "gla/tensor_io.hpp"
#include "gla/verify.hpp"

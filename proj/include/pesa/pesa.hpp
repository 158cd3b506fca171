#pragma once

#include "pesa/backend.hpp"
#include "pesa/clock.hpp"
#include "pesa/config.hpp"
#include "pesa/dataset_io.hpp"
#include "pesa/domain.hpp"
#include "pesa/errors.hpp"
#include "pesa/evaluation.hpp"
#include "pesa/hash.hpp"
#include "pesa/parallel.hpp"
#include "pesa/proof_enhancement.hpp"
#include "pesa/record_io.hpp"
#include "pesa/self_annotation.hpp"
#include "pesa/templates.hpp"
